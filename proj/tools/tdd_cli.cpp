#include "tdd/commands.hpp"
#include "tdd/config.hpp"
#include "tdd/errors.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <string>

namespace {

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("tdd");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    const char* env = std::getenv("TDD_LOG");
    if (env == nullptr) return;
    const std::string level = env;
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else if (level != "info") {
        spdlog::warn("TDD_LOG='{}' not one of error, info, debug; using info", level);
    }
}

int exit_code_for(tdd::ErrorKind kind) { return kind == tdd::ErrorKind::usage ? 2 : 3; }

}  // namespace

int main(int argc, char** argv) {
    configure_logging();

    CLI::App app{"Time-domain decomposition for parabolic optimal control: convergence analysis and solvers"};
    app.require_subcommand(1);
    std::string config_path;
    tdd::RunContext ctx;
    std::string out_dir = "out";
    app.add_option("--config", config_path, "configuration file (key=value with [sections])")->required();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", ctx.seed, "seed for random initial guesses and sampled checks")->capture_default_str();
    app.add_option("--jobs", ctx.jobs, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);

    const char* commands[][2] = {
        {"analyze", "convergence factor curves over the eigenvalue sweep"},
        {"theta-opt", "closed-form and numeric optimal relaxation"},
        {"solve", "discrete decomposition runs with iteration logs and trajectories"},
        {"verify", "acceptance checks; exit code 0 iff all pass"},
    };
    for (const auto& [cmd, help] : commands) app.add_subcommand(cmd, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    ctx.out_dir = out_dir;
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        const tdd::RunConfig config = tdd::load_config(config_path);
        spdlog::debug("effective configuration:\n{}", tdd::to_ini(config));
        const tdd::CommandOutcome outcome = tdd::run_command(command, config, ctx);
        for (const auto& file : outcome.files) spdlog::info("wrote {}", (ctx.out_dir / file).string());
        spdlog::info("wrote {}", (ctx.out_dir / "RESULTS.md").string());
        if (command == "verify") std::cout << outcome.summary;
        return outcome.exit_code;
    } catch (const tdd::Error& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 3;
    }
}
