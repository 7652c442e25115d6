#pragma once

#include "tdd/algorithm.hpp"
#include "tdd/config.hpp"
#include "tdd/convergence_report.hpp"
#include "tdd/csv.hpp"
#include "tdd/errors.hpp"
#include "tdd/parallel.hpp"
#include "tdd/rho_analysis.hpp"
#include "tdd/spectral_model.hpp"
#include "tdd/theta_search.hpp"
#include "tdd/time_dd_solver.hpp"
#include "tdd/verification.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace tdd {

struct RunContext {
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 0;
    int jobs = 0;
};

/// What a subcommand produced: files written (relative to the output
/// directory), a markdown summary and the process exit code.
struct CommandOutcome {
    std::string command;
    std::vector<std::string> files;
    std::string summary;
    int exit_code = 0;
};

namespace commands_detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

inline void save(CommandOutcome& outcome, const RunContext& ctx, const std::string& file, const CsvTable& table) {
    table.save(ctx.out_dir / file);
    outcome.files.push_back(file);
}

inline void save(CommandOutcome& outcome, const RunContext& ctx, const std::string& file, const std::string& text) {
    write_text(ctx.out_dir / file, text);
    outcome.files.push_back(file);
}

inline std::string num(double v) { return csv::format_number(v); }

inline std::string column_label(AlgorithmId id, double theta, bool several) {
    return several ? std::string(name(id)) + "@" + num(theta) : std::string(name(id));
}

inline std::string gnuplot_header(const std::string& png, const std::string& title) {
    return "set datafile separator ','\nset terminal png size 900,600\nset output '" + png + "'\nset title '" +
           title + "'\nset key outside right\nset grid\n";
}

inline ThetaSearchResult numeric_optimum(AlgorithmId id, const ProblemParams& params, const std::vector<double>& d,
                                         const ThetaSearchOptions& options) {
    return theta_star_numeric(id, params, d, options);
}

/// Relaxation used by solve: fixed value or the numeric optimum on the model spectrum.
inline double solve_theta(const RunConfig& c, AlgorithmId id, const ProblemParams& grid_params,
                          const std::vector<double>& d) {
    if (!c.solver.theta_opt) return c.solver.theta.value_or(c.problem.theta);
    return numeric_optimum(id, grid_params, d, c.theta_search).theta;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = u(rng);
    return f;
}

inline DiscreteProblem make_problem(const RunConfig& c, SpectralModel model) {
    const SolverConfig& s = c.solver;
    return s.problem == ProblemKind::error ? make_error_problem(std::move(model), c.problem, s.nt, s.scheme)
                                           : make_forced_problem(std::move(model), c.problem, s.nt, s.scheme);
}

}  // namespace commands_detail

/// Convergence factor curves: one row per eigenvalue, one column per
/// (algorithm, theta), then rows for the d = 0 and d = infinity limits.
inline CommandOutcome cmd_analyze(const RunConfig& c, const RunContext& ctx) {
    using namespace commands_detail;
    CommandOutcome outcome{"analyze", {}, {}, 0};
    const std::vector<double> d = spectrum_points(c);

    struct Column {
        AlgorithmId id;
        double theta;
        std::string label;
    };
    std::vector<Column> columns;
    const std::vector<double> thetas = c.sweep.thetas.empty() ? std::vector<double>{c.problem.theta} : c.sweep.thetas;
    if (c.sweep.theta_opt) {
        std::vector<double> opt(c.algorithms.size());
        parallel_for_index(c.algorithms.size(), ctx.jobs, [&](std::size_t i) {
            opt[i] = numeric_optimum(c.algorithms[i], c.problem, d, c.theta_search).theta;
        });
        for (std::size_t i = 0; i < c.algorithms.size(); ++i) {
            columns.push_back({c.algorithms[i], opt[i], std::string(name(c.algorithms[i]))});
        }
    } else {
        for (AlgorithmId id : c.algorithms) {
            for (double t : thetas) columns.push_back({id, t, column_label(id, t, thetas.size() > 1)});
        }
    }

    const std::size_t rows = d.size();
    std::vector<double> values(columns.size() * rows);
    parallel_for_index(values.size(), ctx.jobs, [&](std::size_t k) {
        const Column& col = columns[k / rows];
        values[k] = rho(col.id, d[k % rows], c.problem.with_theta(col.theta));
    });

    std::vector<std::string> header{"d"};
    for (const auto& col : columns) header.push_back(col.label);
    CsvTable table(header);
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<std::string> cells{num(d[r])};
        for (std::size_t k = 0; k < columns.size(); ++k) cells.push_back(num(values[k * rows + r]));
        table.add_row(std::move(cells));
    }
    std::vector<std::string> zero{"0"}, inf{std::string(csv::kInfinity)};
    for (const auto& col : columns) {
        zero.push_back(num(rho_at_zero(col.id, c.problem.with_theta(col.theta))));
        inf.push_back(num(rho_at_infinity(col.id, col.theta)));
    }
    table.add_row(std::move(zero));
    table.add_row(std::move(inf));
    save(outcome, ctx, "analyze.csv", table);

    std::ostringstream gp;
    gp << gnuplot_header("analyze.png", "convergence factor, nu=" + num(c.problem.nu) + " gamma=" +
                                            num(c.problem.gamma) + " alpha=" + num(c.problem.alpha))
       << "set logscale x\nset xlabel 'd'\nset ylabel 'rho'\n"
       << "plot for [i=2:" << header.size() << "] 'analyze.csv' using 1:(($1 > 0 && $1 < 1e300) ? column(i) : 1/0) "
       << "with lines title columnheader(i)\n";
    save(outcome, ctx, "analyze.gp", gp.str());

    std::ostringstream md;
    md << "Convergence factors at " << rows << " eigenvalue(s) in [" << num(d.front()) << ", " << num(d.back())
       << "], with limit rows for d = 0 and d = inf.\n\n";
    md << "| column | theta | max over sweep | d = 0 | d = inf |\n|---|---|---|---|---|\n";
    for (std::size_t k = 0; k < columns.size(); ++k) {
        double mx = 0.0;
        for (std::size_t r = 0; r < rows; ++r) mx = std::max(mx, values[k * rows + r]);
        md << "| " << columns[k].label << " | " << num(columns[k].theta) << " | " << num(mx) << " | "
           << table.rows()[rows][k + 1] << " | " << table.rows()[rows + 1][k + 1] << " |\n";
    }
    outcome.summary = md.str();
    return outcome;
}

/// Closed-form and numeric minimax relaxation per algorithm.
inline CommandOutcome cmd_theta_opt(const RunConfig& c, const RunContext& ctx) {
    using namespace commands_detail;
    CommandOutcome outcome{"theta-opt", {}, {}, 0};
    const std::vector<double> d = spectrum_points(c);

    struct Row {
        std::optional<ThetaStar> closed;
        ThetaSearchResult numeric{};
    };
    std::vector<Row> rows(c.algorithms.size());
    parallel_for_index(c.algorithms.size(), ctx.jobs, [&](std::size_t i) {
        const AlgorithmId id = c.algorithms[i];
        if (category(id) != Category::I) rows[i].closed = theta_star_closed_form(id, c.problem);
        rows[i].numeric = numeric_optimum(id, c.problem, d, c.theta_search);
    });

    CsvTable table(
        {"algorithm", "theta_closed_form", "theta_numeric", "rho_minimax", "discrepancy", "status"});
    std::ostringstream md;
    md << "Minimax relaxation over " << d.size() << " eigenvalue(s) in [" << num(d.front()) << ", "
       << num(d.back()) << "] plus d = 0 and d = " << num(c.theta_search.large_d_proxy) << ".\n\n"
       << "| algorithm | closed form | numeric | rho at optimum | status |\n|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        const std::string closed = r.closed ? num(r.closed->value) : std::string(csv::kNotApplicable);
        const std::string discrepancy =
            r.closed ? num(std::abs(r.closed->value - r.numeric.theta)) : std::string(csv::kNotApplicable);
        const std::string status = r.closed ? (r.closed->proven ? "proven" : "heuristic") : "numeric-only";
        table.add_row({std::string(name(c.algorithms[i])), closed, num(r.numeric.theta), num(r.numeric.rho),
                       discrepancy, status});
        md << "| " << name(c.algorithms[i]) << " | " << closed << " | " << num(r.numeric.theta) << " | "
           << num(r.numeric.rho) << " | " << status << " |\n";
    }
    save(outcome, ctx, "theta_opt.csv", table);
    outcome.summary = md.str();
    return outcome;
}

struct SolveRecord {
    AlgorithmId id = AlgorithmId::DN1;
    double theta = 1.0;
    DdStatus status = DdStatus::max_iterations;
    IterationHistory history;
    TrajectoryPair trajectory;
    double predicted = 0.0;
    double final_error = 0.0;
    double growth = 0.0;
};

/// Discrete DD runs on the configured operator, one per algorithm.
inline CommandOutcome cmd_solve(const RunConfig& c, const RunContext& ctx) {
    using namespace commands_detail;
    CommandOutcome outcome{"solve", {}, {}, 0};
    const SpectralModel model = build_model(c.spectrum);
    const DiscreteProblem problem = make_problem(c, model);
    if (problem.grid.snapped()) {
        spdlog::warn("alpha={} is not a grid node for nt={}; using alpha={}", num(c.problem.alpha), c.solver.nt,
                     num(problem.grid.alpha()));
    }
    const ProblemParams gp = problem.grid_params();
    const std::vector<double> d(model.eigenvalues().begin(), model.eigenvalues().end());
    spdlog::info("monolithic reference: n={} nt={} scheme={}", problem.n(), c.solver.nt, name(c.solver.scheme));
    const TrajectoryPair mono = monolithic_solve(problem);

    std::vector<SolveRecord> records(c.algorithms.size());
    parallel_for_index(c.algorithms.size(), ctx.jobs, [&](std::size_t i) {
        SolveRecord& rec = records[i];
        rec.id = c.algorithms[i];
        rec.theta = solve_theta(c, rec.id, gp, d);
        Eigen::VectorXd f0 = Eigen::VectorXd::Zero(problem.n());
        if (c.solver.initial_guess == InitialGuess::random) f0 = random_vector(problem.n(), ctx.seed);
        if (c.solver.initial_guess == InitialGuess::monolithic) f0 = monolithic_interface_datum(problem, rec.id, mono);
        if (c.solver.method == SolveMethod::coupled) {
            DdOptions options;
            options.reference = &mono;
            options.divergence_factor = c.solver.divergence_factor;
            DdResult r = dd_solve(problem, rec.id, rec.theta, f0, c.solver.k_max, c.solver.tol, options);
            rec.status = r.status;
            rec.history = std::move(r.history);
            rec.trajectory = std::move(r.trajectory);
        } else {
            PerModeResult r = dd_solve_per_mode(problem, rec.id, rec.theta, f0, c.solver.k_max, c.solver.tol, ctx.jobs);
            rec.status = r.status;
            rec.history = std::move(r.history);
            rec.trajectory = std::move(r.trajectory);
        }
        rec.predicted = spectral_report(rec.id, gp.with_theta(rec.theta), d).spectral_max;
        rec.final_error = l2_distance(rec.trajectory, mono, problem.grid.dt);
        rec.growth = growth_rate(rec.history);
        spdlog::info("{}: {} after {} iteration(s), theta={}", name(rec.id), name(rec.status),
                     rec.history.iterations(), num(rec.theta));
    });

    std::ostringstream md, gp_script;
    md << "Discrete run: n=" << problem.n() << ", nt=" << c.solver.nt << ", dt=" << num(problem.grid.dt)
       << ", alpha on grid=" << num(problem.grid.alpha()) << ", scheme=" << name(c.solver.scheme) << ", tol="
       << num(c.solver.tol) << ".\n\n"
       << "| algorithm | theta | status | iterations | observed rate | predicted spectral max | final L2 error |\n"
       << "|---|---|---|---|---|---|---|\n";
    gp_script << gnuplot_header("solve.png", "interface residual") << "set logscale y\nset xlabel 'iteration'\n"
              << "set ylabel 'residual'\nplot ";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const SolveRecord& rec = records[i];
        const std::string stem = "solve_" + std::string(name(rec.id));
        CsvTable iters({"iteration", "residual_norm", "error_norm"});
        for (int k = 0; k < rec.history.iterations(); ++k) {
            const std::string err = k < static_cast<int>(rec.history.error_norms.size())
                                        ? num(rec.history.error_norms[static_cast<std::size_t>(k)])
                                        : std::string(csv::kNotApplicable);
            iters.add_row({std::to_string(k + 1), num(rec.history.residual_norms[static_cast<std::size_t>(k)]), err});
        }
        const std::string observed = csv::format_optional(rec.history.observed_rate);
        iters.add_footer("algorithm", std::string(name(rec.id)));
        iters.add_footer("theta", num(rec.theta));
        iters.add_footer("status", std::string(name(rec.status)));
        iters.add_footer("iterations", std::to_string(rec.history.iterations()));
        iters.add_footer("observed_rate", observed);
        iters.add_footer("predicted_spectral_max", num(rec.predicted));
        iters.add_footer("growth_rate", rec.status == DdStatus::diverged ? num(rec.growth)
                                                                         : std::string(csv::kNotApplicable));
        iters.add_footer("final_error", rec.status == DdStatus::diverged ? std::string(csv::kDiverged)
                                                                         : num(rec.final_error));
        save(outcome, ctx, stem + "_iterations.csv", iters);

        std::vector<std::string> header{"t"};
        for (Eigen::Index r = 0; r < problem.n(); ++r) header.push_back("y" + std::to_string(r + 1));
        for (Eigen::Index r = 0; r < problem.n(); ++r) header.push_back("lambda" + std::to_string(r + 1));
        CsvTable traj(header);
        for (int j = 0; j < rec.trajectory.nodes(); ++j) {
            std::vector<double> row{problem.grid.time(j)};
            for (Eigen::Index r = 0; r < problem.n(); ++r) row.push_back(rec.trajectory.y(r, j));
            for (Eigen::Index r = 0; r < problem.n(); ++r) row.push_back(rec.trajectory.lambda(r, j));
            traj.add_numeric_row(row);
        }
        save(outcome, ctx, stem + "_trajectory.csv", traj);

        md << "| " << name(rec.id) << " | " << num(rec.theta) << " | " << name(rec.status) << " | "
           << rec.history.iterations() << " | " << observed << " | " << num(rec.predicted) << " | "
           << (rec.status == DdStatus::diverged ? "div (growth " + num(rec.growth) + ")" : num(rec.final_error))
           << " |\n";
        gp_script << (i ? ", " : "") << "'" << stem << "_iterations.csv' using 1:2 with linespoints title '"
                  << name(rec.id) << "'";
    }
    gp_script << "\n";
    save(outcome, ctx, "solve.gp", gp_script.str());
    outcome.summary = md.str();
    return outcome;
}

struct ExpectationResult {
    AlgorithmId id;
    bool expect_divergence;
    bool passed;
    std::string detail;
};

/// Confirms an expected convergence or divergence twice: by the spectral
/// prediction and by a seeded discrete run on the error equation.
inline ExpectationResult check_expectation(const RunConfig& c, AlgorithmId id, bool expect_divergence,
                                           const RunContext& ctx) {
    using namespace commands_detail;
    const std::vector<double> d = spectrum_points(c);
    const SpectralModel model =
        SpectralModel::from_eigenvalues(Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size())));
    const DiscreteProblem problem = make_error_problem(model, c.problem, c.verify.nt);
    const double predicted = spectral_report(id, problem.grid_params(), d).spectral_max;
    const Eigen::VectorXd f0 = random_vector(problem.n(), ctx.seed);
    const PerModeResult run =
        dd_solve_per_mode(problem, id, c.problem.theta, f0, c.verify.k_max, 1e-10 * f0.norm(), ctx.jobs);
    double growth = growth_rate(run.history);
    for (const IterationHistory& h : run.mode_histories) {
        const double g = growth_rate(h);
        if (std::isfinite(g)) growth = std::isfinite(growth) ? std::max(growth, g) : g;
    }
    bool ok = false;
    if (expect_divergence) {
        ok = predicted > 1.0 && (run.status == DdStatus::diverged || growth > 1.0);
    } else {
        ok = predicted < 1.0 && run.status == DdStatus::converged;
    }
    std::ostringstream os;
    os << "expected " << (expect_divergence ? "divergence" : "convergence") << "; predicted spectral max "
       << num(predicted) << ", discrete status " << name(run.status) << " after " << run.history.iterations()
       << " iteration(s), worst per-mode growth " << num(growth);
    return {id, expect_divergence, ok, os.str()};
}

/// Acceptance suite plus configured convergence expectations; exit code 0
/// iff every check passes.
inline CommandOutcome cmd_verify(const RunConfig& c, const RunContext& ctx) {
    using namespace commands_detail;
    CommandOutcome outcome{"verify", {}, {}, 0};
    CsvTable table({"check", "name", "status", "detail"});
    std::ostringstream md;
    md << "| check | name | status | seconds | detail |\n|---|---|---|---|---|\n";
    int failed = 0;
    auto record = [&](const std::string& check, const std::string& label, bool passed, const std::string& detail,
                      std::optional<double> seconds) {
        table.add_row({check, label, passed ? "pass" : "fail", csv::quote(detail)});
        md << "| " << check << " | " << label << " | " << (passed ? "PASS" : "FAIL") << " | "
           << (seconds ? num(std::round(*seconds * 1000.0) / 1000.0) : std::string("-")) << " | " << detail
           << " |\n";
        if (!passed) ++failed;
        if (passed) {
            spdlog::info("{} {}: pass", check, label);
        } else {
            spdlog::error("{} {}: FAIL {}", check, label, detail);
        }
    };
    if (c.verify.acceptance) {
        AcceptanceOptions options;
        options.seed = ctx.seed;
        options.oracle_samples = c.verify.oracle_samples;
        for (const CheckResult& r : verify::acceptance_suite(options)) {
            record(std::to_string(r.criterion), r.name, r.passed, r.detail, r.seconds);
        }
    }
    for (AlgorithmId id : c.verify.expect_diverge) {
        const ExpectationResult e = check_expectation(c, id, true, ctx);
        record("expect-diverge", std::string(name(id)), e.passed, e.detail, std::nullopt);
    }
    for (AlgorithmId id : c.verify.expect_converge) {
        const ExpectationResult e = check_expectation(c, id, false, ctx);
        record("expect-converge", std::string(name(id)), e.passed, e.detail, std::nullopt);
    }
    save(outcome, ctx, "verify.csv", table);
    outcome.exit_code = failed == 0 ? 0 : 1;
    outcome.summary = std::to_string(table.rows().size() - static_cast<std::size_t>(failed)) + " of " +
                      std::to_string(table.rows().size()) + " checks passed.\n\n" + md.str();
    return outcome;
}

/// RESULTS.md: command, seed, files, summary and the effective config.
inline void write_results(const CommandOutcome& outcome, const RunConfig& c, const RunContext& ctx) {
    std::ostringstream md;
    md << "# Results: " << outcome.command << "\n\n"
       << "- config: `" << c.origin.string() << "`\n- seed: " << ctx.seed << "\n- exit code: " << outcome.exit_code
       << "\n\n## Summary\n\n"
       << outcome.summary << "\n## Files\n\n";
    for (const auto& f : outcome.files) md << "- `" << f << "`\n";
    md << "\n## Effective configuration\n\n```ini\n" << to_ini(c) << "```\n";
    commands_detail::write_text(ctx.out_dir / "RESULTS.md", md.str());
}

inline CommandOutcome run_command(const std::string& command, const RunConfig& c, const RunContext& ctx) {
    std::filesystem::create_directories(ctx.out_dir);
    CommandOutcome outcome;
    if (command == "analyze") {
        outcome = cmd_analyze(c, ctx);
    } else if (command == "theta-opt") {
        outcome = cmd_theta_opt(c, ctx);
    } else if (command == "solve") {
        outcome = cmd_solve(c, ctx);
    } else if (command == "verify") {
        outcome = cmd_verify(c, ctx);
    } else {
        throw Error(ErrorKind::usage, "unknown subcommand '" + command + "'");
    }
    write_results(outcome, c, ctx);
    return outcome;
}

}  // namespace tdd
