#pragma once

#include "tdd/algorithm.hpp"
#include "tdd/csv.hpp"
#include "tdd/errors.hpp"
#include "tdd/spectral_model.hpp"
#include "tdd/theta_search.hpp"
#include "tdd/time_dd_solver.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace tdd {

enum class SpectrumSource { grid, laplacian, matrix, eigenvalues };
enum class InitialGuess { zero, random, monolithic };
enum class ProblemKind { error, forced };
enum class SolveMethod { coupled, per_mode };

struct SpectrumConfig {
    SpectrumSource source = SpectrumSource::grid;
    int n = 16;
    double length = 1.0;
    std::filesystem::path matrix_file;
    std::vector<double> values;
};

struct SweepConfig {
    double d_min = 1e-2;
    double d_max = 1e2;
    int d_count = 400;
    /// Empty means the single [problem] theta.
    std::vector<double> thetas;
    /// Each algorithm at its own numeric optimum.
    bool theta_opt = false;
};

struct SolverConfig {
    int nt = 1000;
    TimeScheme scheme = TimeScheme::trapezoidal;
    double tol = 1e-10;
    int k_max = 200;
    InitialGuess initial_guess = InitialGuess::zero;
    ProblemKind problem = ProblemKind::error;
    SolveMethod method = SolveMethod::coupled;
    /// Unset means the [problem] theta.
    std::optional<double> theta;
    bool theta_opt = false;
    double divergence_factor = 1e12;
};

struct VerifyConfig {
    bool acceptance = true;
    int oracle_samples = 200;
    std::vector<AlgorithmId> expect_diverge;
    std::vector<AlgorithmId> expect_converge;
    int nt = 200;
    int k_max = 400;
};

struct RunConfig {
    ProblemParams problem;
    std::vector<AlgorithmId> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
    SpectrumConfig spectrum;
    SweepConfig sweep;
    ThetaSearchOptions theta_search;
    SolverConfig solver;
    VerifyConfig verify;
    std::filesystem::path origin;
};

namespace config_detail {

using Schema = std::map<std::string, std::set<std::string>>;

inline const Schema& schema() {
    static const Schema s = {
        {"problem", {"nu", "gamma", "T", "alpha", "theta", "alpha_margin"}},
        {"algorithms", {"use"}},
        {"spectrum", {"source", "n", "length", "matrix_file", "values"}},
        {"sweep", {"d_min", "d_max", "d_count", "theta"}},
        {"theta_search", {"large_d_proxy", "grid_step", "refine_tolerance", "tie_tolerance"}},
        {"solver", {"nt", "scheme", "tol", "k_max", "initial_guess", "problem", "method", "theta",
                    "divergence_factor"}},
        {"verify", {"acceptance", "oracle_samples", "expect_diverge", "expect_converge", "nt", "k_max"}},
    };
    return s;
}

[[noreturn]] inline void fail(const std::string& field, const std::string& message) {
    throw Error(ErrorKind::usage, "config field " + field + ": " + message);
}

inline std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t\r");
    return std::string(text.substr(first, last - first + 1));
}

inline double parse_double(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc() || end != t.data() + t.size() || !std::isfinite(value)) {
        fail(field, "expected a finite number, got '" + text + "'");
    }
    return value;
}

inline int parse_int(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    int value = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
        fail(field, "expected an integer, got '" + text + "'");
    }
    return value;
}

inline bool parse_bool(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    fail(field, "expected true or false, got '" + text + "'");
}

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        if (!t.empty()) items.push_back(t);
    }
    return items;
}

inline std::vector<double> parse_doubles(const std::string& field, const std::string& text) {
    std::vector<double> values;
    for (const auto& item : split_list(text)) values.push_back(parse_double(field, item));
    if (values.empty()) fail(field, "expected a comma-separated list of numbers");
    return values;
}

inline std::vector<AlgorithmId> parse_algorithms(const std::string& field, const std::string& text) {
    if (trim(text) == "all") return {kAllAlgorithms.begin(), kAllAlgorithms.end()};
    std::vector<AlgorithmId> ids;
    for (const auto& item : split_list(text)) {
        try {
            const AlgorithmId id = parse_algorithm(item);
            if (std::find(ids.begin(), ids.end(), id) != ids.end()) fail(field, "duplicate algorithm " + item);
            ids.push_back(id);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::usage) throw;
            fail(field, "unknown algorithm '" + item + "'");
        }
    }
    return ids;
}

template <class Enum>
Enum parse_choice(const std::string& field, const std::string& text,
                  std::initializer_list<std::pair<std::string_view, Enum>> choices) {
    const std::string t = trim(text);
    std::string expected;
    for (const auto& [label, value] : choices) {
        if (t == label) return value;
        expected += (expected.empty() ? "" : "|") + std::string(label);
    }
    fail(field, "expected " + expected + ", got '" + text + "'");
}

/// Reads [section] key when present.
class Reader {
public:
    explicit Reader(const boost::property_tree::ptree& tree) : tree_(tree) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        const auto s = tree_.get_child_optional(section);
        if (!s) return std::nullopt;
        const auto v = s->get_optional<std::string>(key);
        if (!v) return std::nullopt;
        return *v;
    }

    template <class Fn>
    void with(const std::string& section, const std::string& key, Fn&& fn) const {
        if (const auto v = raw(section, key)) fn(field(section, key), *v);
    }

    static std::string field(const std::string& section, const std::string& key) {
        return "[" + section + "] " + key;
    }

private:
    const boost::property_tree::ptree& tree_;
};

inline void reject_unknown(const boost::property_tree::ptree& tree) {
    for (const auto& [section, body] : tree) {
        const auto it = schema().find(section);
        if (it == schema().end()) {
            fail(section, body.empty() && !body.data().empty() ? "key outside any section" : "unknown section");
        }
        if (!body.data().empty()) fail(section, "key outside any section");
        for (const auto& [key, value] : body) {
            if (!value.empty()) fail(Reader::field(section, key), "nested keys are not supported");
            if (it->second.count(key) == 0) fail(Reader::field(section, key), "unknown key");
        }
    }
}

}  // namespace config_detail

/// Parses the key=value config text. Relative file paths resolve against
/// base_dir. Unknown sections or keys and malformed values raise usage errors
/// naming the field; the problem parameters are validated before returning.
inline RunConfig parse_config(std::istream& in, const std::string& origin,
                              const std::filesystem::path& base_dir = {}) {
    using namespace config_detail;
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorKind::usage, origin + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    reject_unknown(tree);
    const Reader r(tree);
    RunConfig c;
    c.origin = origin;

    auto number = [&](const char* section, const char* key, double& target) {
        r.with(section, key, [&](const std::string& f, const std::string& v) { target = parse_double(f, v); });
    };
    auto integer = [&](const char* section, const char* key, int& target) {
        r.with(section, key, [&](const std::string& f, const std::string& v) { target = parse_int(f, v); });
    };

    number("problem", "nu", c.problem.nu);
    number("problem", "gamma", c.problem.gamma);
    number("problem", "T", c.problem.T);
    number("problem", "alpha", c.problem.alpha);
    number("problem", "theta", c.problem.theta);
    number("problem", "alpha_margin", c.problem.alpha_margin);

    r.with("algorithms", "use", [&](const std::string& f, const std::string& v) {
        c.algorithms = parse_algorithms(f, v);
        if (c.algorithms.empty()) fail(f, "no algorithm selected");
    });

    r.with("spectrum", "source", [&](const std::string& f, const std::string& v) {
        c.spectrum.source = parse_choice<SpectrumSource>(f, v,
                                                         {{"grid", SpectrumSource::grid},
                                                          {"laplacian", SpectrumSource::laplacian},
                                                          {"matrix", SpectrumSource::matrix},
                                                          {"eigenvalues", SpectrumSource::eigenvalues}});
    });
    integer("spectrum", "n", c.spectrum.n);
    number("spectrum", "length", c.spectrum.length);
    r.with("spectrum", "matrix_file", [&](const std::string&, const std::string& v) {
        const std::filesystem::path p = trim(v);
        c.spectrum.matrix_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    });
    r.with("spectrum", "values",
           [&](const std::string& f, const std::string& v) { c.spectrum.values = parse_doubles(f, v); });

    number("sweep", "d_min", c.sweep.d_min);
    number("sweep", "d_max", c.sweep.d_max);
    integer("sweep", "d_count", c.sweep.d_count);
    r.with("sweep", "theta", [&](const std::string& f, const std::string& v) {
        if (trim(v) == "opt") {
            c.sweep.theta_opt = true;
        } else {
            c.sweep.thetas = parse_doubles(f, v);
        }
    });

    number("theta_search", "large_d_proxy", c.theta_search.large_d_proxy);
    number("theta_search", "grid_step", c.theta_search.grid_step);
    number("theta_search", "refine_tolerance", c.theta_search.refine_tolerance);
    number("theta_search", "tie_tolerance", c.theta_search.tie_tolerance);

    integer("solver", "nt", c.solver.nt);
    r.with("solver", "scheme", [&](const std::string& f, const std::string& v) {
        c.solver.scheme = parse_choice<TimeScheme>(
            f, v, {{"trapezoidal", TimeScheme::trapezoidal}, {"implicit-euler", TimeScheme::implicit_euler}});
    });
    number("solver", "tol", c.solver.tol);
    integer("solver", "k_max", c.solver.k_max);
    r.with("solver", "initial_guess", [&](const std::string& f, const std::string& v) {
        c.solver.initial_guess = parse_choice<InitialGuess>(
            f, v,
            {{"zero", InitialGuess::zero}, {"random", InitialGuess::random}, {"monolithic", InitialGuess::monolithic}});
    });
    r.with("solver", "problem", [&](const std::string& f, const std::string& v) {
        c.solver.problem =
            parse_choice<ProblemKind>(f, v, {{"error", ProblemKind::error}, {"forced", ProblemKind::forced}});
    });
    r.with("solver", "method", [&](const std::string& f, const std::string& v) {
        c.solver.method =
            parse_choice<SolveMethod>(f, v, {{"coupled", SolveMethod::coupled}, {"per-mode", SolveMethod::per_mode}});
    });
    r.with("solver", "theta", [&](const std::string& f, const std::string& v) {
        if (trim(v) == "opt") {
            c.solver.theta_opt = true;
        } else {
            c.solver.theta = parse_double(f, v);
        }
    });
    number("solver", "divergence_factor", c.solver.divergence_factor);

    r.with("verify", "acceptance",
           [&](const std::string& f, const std::string& v) { c.verify.acceptance = parse_bool(f, v); });
    integer("verify", "oracle_samples", c.verify.oracle_samples);
    r.with("verify", "expect_diverge",
           [&](const std::string& f, const std::string& v) { c.verify.expect_diverge = parse_algorithms(f, v); });
    r.with("verify", "expect_converge",
           [&](const std::string& f, const std::string& v) { c.verify.expect_converge = parse_algorithms(f, v); });
    integer("verify", "nt", c.verify.nt);
    integer("verify", "k_max", c.verify.k_max);

    try {
        c.problem.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::usage, std::string("config section [problem]: ") + e.what());
    }
    auto require = [](bool ok, const char* section, const char* key, const char* what) {
        if (!ok) fail(Reader::field(section, key), what);
    };
    require(c.spectrum.n >= 2, "spectrum", "n", "must be >= 2");
    require(c.spectrum.length > 0.0, "spectrum", "length", "must be > 0");
    require(c.sweep.d_min >= 0.0, "sweep", "d_min", "must be >= 0");
    require(c.sweep.d_max >= c.sweep.d_min, "sweep", "d_max", "must be >= d_min");
    require(c.sweep.d_count >= 1, "sweep", "d_count", "must be >= 1");
    require(c.sweep.d_count == 1 || c.sweep.d_min > 0.0, "sweep", "d_min", "must be > 0 for a log grid");
    for (double t : c.sweep.thetas) require(t > 0.0 && t < 2.0, "sweep", "theta", "entries must lie in (0, 2)");
    require(c.theta_search.grid_step > 0.0 && c.theta_search.grid_step < 1.0, "theta_search", "grid_step",
            "must lie in (0, 1)");
    require(c.theta_search.large_d_proxy > 0.0, "theta_search", "large_d_proxy", "must be > 0");
    require(c.theta_search.refine_tolerance > 0.0, "theta_search", "refine_tolerance", "must be > 0");
    require(c.theta_search.tie_tolerance >= 0.0, "theta_search", "tie_tolerance", "must be >= 0");
    require(c.solver.nt >= 2, "solver", "nt", "must be >= 2");
    require(c.solver.tol > 0.0, "solver", "tol", "must be > 0");
    require(c.solver.k_max >= 1, "solver", "k_max", "must be >= 1");
    require(!c.solver.theta || (*c.solver.theta > 0.0 && *c.solver.theta < 2.0), "solver", "theta",
            "must lie in (0, 2)");
    require(c.solver.divergence_factor > 1.0, "solver", "divergence_factor", "must be > 1");
    require(c.verify.oracle_samples >= 1, "verify", "oracle_samples", "must be >= 1");
    require(c.verify.nt >= 2, "verify", "nt", "must be >= 2");
    require(c.verify.k_max >= 1, "verify", "k_max", "must be >= 1");
    if (c.spectrum.source == SpectrumSource::matrix && c.spectrum.matrix_file.empty()) {
        fail("[spectrum] matrix_file", "required when source = matrix");
    }
    if (c.spectrum.source == SpectrumSource::eigenvalues && c.spectrum.values.empty()) {
        fail("[spectrum] values", "required when source = eigenvalues");
    }
    for (double d : c.spectrum.values) require(d >= 0.0, "spectrum", "values", "eigenvalues must be >= 0");
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open config file " + path.string());
    return parse_config(in, path.string(), path.parent_path());
}

/// Log-spaced points from d_min to d_max inclusive; a single point is d_min.
inline std::vector<double> log_grid(double d_min, double d_max, int count) {
    if (count < 1) throw Error(ErrorKind::invalid_input, "grid needs at least one point");
    if (count == 1) return {d_min};
    if (!(d_min > 0.0 && d_max >= d_min)) throw Error(ErrorKind::invalid_input, "log grid needs 0 < d_min <= d_max");
    std::vector<double> d(static_cast<size_t>(count));
    const double lo = std::log10(d_min), hi = std::log10(d_max);
    for (int i = 0; i < count; ++i) {
        d[static_cast<size_t>(i)] =
            i == count - 1 ? d_max : std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / (count - 1));
    }
    d.front() = d_min;
    return d;
}

/// Operator described by [spectrum]; the log grid has no operator.
inline SpectralModel build_model(const SpectrumConfig& s) {
    switch (s.source) {
        case SpectrumSource::laplacian: return build_laplacian_1d(s.n, s.length);
        case SpectrumSource::matrix: return read_matrix_file(s.matrix_file);
        case SpectrumSource::eigenvalues:
            return SpectralModel::from_eigenvalues(Eigen::Map<const Eigen::VectorXd>(
                s.values.data(), static_cast<Eigen::Index>(s.values.size())));
        case SpectrumSource::grid: break;
    }
    throw Error(ErrorKind::usage, "config field [spectrum] source: grid has no operator; use laplacian, matrix "
                                  "or eigenvalues");
}

/// Eigenvalues swept by analyze and theta-opt, ascending.
inline std::vector<double> spectrum_points(const RunConfig& c) {
    if (c.spectrum.source == SpectrumSource::grid) return log_grid(c.sweep.d_min, c.sweep.d_max, c.sweep.d_count);
    const SpectralModel model = build_model(c.spectrum);
    if (model.d_min() < 0.0) {
        throw Error(ErrorKind::unsupported_spectrum, "negative eigenvalue " + csv::format_number(model.d_min()));
    }
    return {model.eigenvalues().begin(), model.eigenvalues().end()};
}

/// Effective configuration, defaults included, in the input format.
inline std::string to_ini(const RunConfig& c) {
    auto num = [](double v) { return csv::format_number(v); };
    auto list = [&](const std::vector<double>& v) {
        std::string s;
        for (double x : v) s += (s.empty() ? "" : ",") + num(x);
        return s;
    };
    auto algs = [](const std::vector<AlgorithmId>& v) {
        std::string s;
        for (AlgorithmId id : v) s += (s.empty() ? "" : ",") + std::string(name(id));
        return s;
    };
    static constexpr const char* sources[] = {"grid", "laplacian", "matrix", "eigenvalues"};
    static constexpr const char* guesses[] = {"zero", "random", "monolithic"};
    std::ostringstream os;
    os << "[problem]\nnu=" << num(c.problem.nu) << "\ngamma=" << num(c.problem.gamma) << "\nT=" << num(c.problem.T)
       << "\nalpha=" << num(c.problem.alpha) << "\ntheta=" << num(c.problem.theta)
       << "\nalpha_margin=" << num(c.problem.alpha_margin) << "\n\n";
    os << "[algorithms]\nuse=" << algs(c.algorithms) << "\n\n";
    os << "[spectrum]\nsource=" << sources[static_cast<int>(c.spectrum.source)] << "\nn=" << c.spectrum.n
       << "\nlength=" << num(c.spectrum.length);
    if (!c.spectrum.matrix_file.empty()) os << "\nmatrix_file=" << c.spectrum.matrix_file.string();
    if (!c.spectrum.values.empty()) os << "\nvalues=" << list(c.spectrum.values);
    os << "\n\n[sweep]\nd_min=" << num(c.sweep.d_min) << "\nd_max=" << num(c.sweep.d_max)
       << "\nd_count=" << c.sweep.d_count << "\ntheta="
       << (c.sweep.theta_opt ? "opt" : c.sweep.thetas.empty() ? num(c.problem.theta) : list(c.sweep.thetas))
       << "\n\n";
    os << "[theta_search]\nlarge_d_proxy=" << num(c.theta_search.large_d_proxy)
       << "\ngrid_step=" << num(c.theta_search.grid_step)
       << "\nrefine_tolerance=" << num(c.theta_search.refine_tolerance)
       << "\ntie_tolerance=" << num(c.theta_search.tie_tolerance) << "\n\n";
    os << "[solver]\nnt=" << c.solver.nt << "\nscheme=" << name(c.solver.scheme) << "\ntol=" << num(c.solver.tol)
       << "\nk_max=" << c.solver.k_max << "\ninitial_guess=" << guesses[static_cast<int>(c.solver.initial_guess)]
       << "\nproblem=" << (c.solver.problem == ProblemKind::error ? "error" : "forced")
       << "\nmethod=" << (c.solver.method == SolveMethod::coupled ? "coupled" : "per-mode") << "\ntheta="
       << (c.solver.theta_opt ? "opt" : num(c.solver.theta.value_or(c.problem.theta)))
       << "\ndivergence_factor=" << num(c.solver.divergence_factor) << "\n\n";
    os << "[verify]\nacceptance=" << (c.verify.acceptance ? "true" : "false")
       << "\noracle_samples=" << c.verify.oracle_samples << "\nexpect_diverge=" << algs(c.verify.expect_diverge)
       << "\nexpect_converge=" << algs(c.verify.expect_converge) << "\nnt=" << c.verify.nt
       << "\nk_max=" << c.verify.k_max << "\n";
    return os.str();
}

}  // namespace tdd
