#pragma once

#include "tdd/algorithm.hpp"
#include "tdd/convergence_report.hpp"
#include "tdd/modal_dd.hpp"
#include "tdd/rho_analysis.hpp"
#include "tdd/spectral_model.hpp"
#include "tdd/theta_search.hpp"
#include "tdd/time_dd_solver.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

// End-to-end checks of the acceptance criteria. Each check returns one
// itemized result; the acceptance test binary and the `verify` subcommand
// both run these.

namespace tdd {

struct CheckResult {
    int criterion = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
    double time_limit = 0.0;
};

struct AcceptanceOptions {
    std::uint64_t seed = 0;
    int oracle_samples = 200;
};

namespace verify {

/// d: two points per decade in [1e-6, 1e8]; nu: decades in [1e-4, 1e2];
/// gamma in {0, 1, 10}; alpha/T in {0.1, ..., 0.9}; T = 1.
struct PropertyGrid {
    std::vector<double> d;
    std::vector<double> nu;
    std::vector<double> gamma{0.0, 1.0, 10.0};
    std::vector<double> alpha;

    PropertyGrid() {
        for (int k = -12; k <= 16; ++k) d.push_back(std::pow(10.0, 0.5 * k));
        for (int k = -4; k <= 2; ++k) nu.push_back(std::pow(10.0, k));
        for (int k = 1; k <= 9; ++k) alpha.push_back(0.1 * k);
    }

    template <class Fn>
    void for_each_params(Fn&& fn) const {
        for (double n : nu) {
            for (double g : gamma) {
                for (double a : alpha) {
                    ProblemParams p;
                    p.nu = n;
                    p.gamma = g;
                    p.alpha = a;
                    fn(p);
                }
            }
        }
    }
};

inline double relative_difference(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Collects violations with a few examples for the report.
class Tally {
public:
    void check(bool ok, const std::function<std::string()>& what) {
        ++checked_;
        if (ok) return;
        ++violations_;
        if (examples_.size() < 3) examples_.push_back(what());
    }

    void note(const std::string& text) { notes_.push_back(text); }

    int violations() const { return violations_; }

    std::string summary() const {
        std::ostringstream os;
        os << checked_ << " checks, " << violations_ << " violations";
        for (const auto& n : notes_) os << "; " << n;
        for (const auto& e : examples_) os << "; e.g. " << e;
        return os.str();
    }

private:
    int checked_ = 0;
    int violations_ = 0;
    std::vector<std::string> examples_;
    std::vector<std::string> notes_;
};

inline std::string describe_point(const char* what, double d, const ProblemParams& p) {
    std::ostringstream os;
    os.precision(6);
    os << what << " at d=" << d << " nu=" << p.nu << " gamma=" << p.gamma << " alpha=" << p.alpha
       << " theta=" << p.theta;
    return os.str();
}

template <class Fn>
CheckResult timed(int criterion, std::string name, double limit, Fn&& body) {
    CheckResult r;
    r.criterion = criterion;
    r.name = std::move(name);
    r.time_limit = limit;
    const auto start = std::chrono::steady_clock::now();
    Tally tally;
    try {
        body(tally);
        r.detail = tally.summary();
        r.passed = tally.violations() == 0;
    } catch (const std::exception& e) {
        r.detail = tally.summary() + "; exception: " + e.what();
        r.passed = false;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.seconds >= limit) {
        r.passed = false;
        r.detail += "; runtime limit exceeded";
    }
    return r;
}

/// Criterion 1: d -> 0 values quoted for nu = 0.1, T = 1, theta = 1.
inline CheckResult figure_values() {
    return timed(1, "figure-value reproduction", 1.0, [](Tally& t) {
        struct Case {
            double gamma, alpha, coth_pair, tanh_pair;
        };
        const std::array<Case, 4> cases{{{0.0, 0.5, 1.185, 0.844},
                                         {10.0, 0.5, 1.005, 0.995},
                                         {0.0, 0.3, 1.386, 0.722},
                                         {10.0, 0.7, 0.771, 1.296}}};
        for (const Case& c : cases) {
            ProblemParams p;
            p.nu = 0.1;
            p.gamma = c.gamma;
            p.alpha = c.alpha;
            p.theta = 1.0;
            for (AlgorithmId id : {AlgorithmId::DN2, AlgorithmId::ND3, AlgorithmId::ND2, AlgorithmId::DN3}) {
                const bool coth_pair = id == AlgorithmId::DN2 || id == AlgorithmId::ND3;
                const double expected = coth_pair ? c.coth_pair : c.tanh_pair;
                for (double value : {rho_at_zero(id, p), rho(id, 0.0, p)}) {
                    t.check(std::abs(value - expected) <= 0.005, [&] {
                        std::ostringstream os;
                        os << name(id) << " gamma=" << c.gamma << " alpha=" << c.alpha << " gives " << value
                           << " (expected " << expected << ")";
                        return os.str();
                    });
                }
            }
        }
    });
}

/// Criterion 2: modal oracle vs closed forms on seeded random tuples.
inline CheckResult oracle_equivalence(std::uint64_t seed, int samples) {
    return timed(2, "oracle equivalence", 5.0, [=](Tally& t) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double worst = 0.0;
        for (AlgorithmId id : kAllAlgorithms) {
            for (int i = 0; i < samples; ++i) {
                ProblemParams p;
                const double u_d = unit(rng);
                const double d = u_d < 0.05 ? 0.0 : std::pow(10.0, -6.0 + 12.0 * unit(rng));
                p.nu = std::pow(10.0, -4.0 + 6.0 * unit(rng));
                p.gamma = std::array<double, 3>{0.0, 1.0, 10.0}[static_cast<size_t>(unit(rng) * 3.0) % 3];
                p.alpha = 0.1 + 0.8 * unit(rng);
                p.theta = 1.0 - unit(rng);  // (0, 1]
                const double formula = rho(id, d, p);
                const double oracle = iteration_ratio<double>(id, d, p);
                const double rel = relative_difference(formula, oracle);
                worst = std::max(worst, rel);
                t.check(rel <= 1e-10, [&] { return describe_point(std::string(name(id)).c_str(), d, p); });
            }
        }
        std::ostringstream os;
        os << samples << " tuples per algorithm, worst relative difference " << worst;
        t.note(os.str());
    });
}

/// Criterion 3: theorem and corollary properties.
inline CheckResult property_suite() {
    return timed(3, "theorem/corollary property suite", 10.0, [](Tally& t) {
        const PropertyGrid grid;
        grid.for_each_params([&](ProblemParams p) {
            p.theta = 1.0;
            const bool left_interface = p.alpha <= 0.5 * p.T;
            for (double d : grid.d) {
                const double dn1 = rho_dn1(d, p);
                t.check(dn1 > 0.0 && dn1 < 1.0, [&] { return describe_point("DN1 contraction", d, p); });
                if (dn1 < 1.0) {
                    double previous = rho_dn1(d, p.with_theta(0.05));
                    for (int k = 2; k <= 20; ++k) {
                        const double current = rho_dn1(d, p.with_theta(0.05 * k));
                        t.check(current < previous, [&] { return describe_point("DN1 theta-monotonicity", d, p); });
                        previous = current;
                    }
                }
                if (p.gamma == 0.0) {
                    const double nd1 = rho_nd1(d, p);
                    t.check(nd1 > 0.0 && nd1 < 1.0, [&] { return describe_point("ND1 contraction", d, p); });
                }
            }
            std::vector<double> with_zero = grid.d;
            with_zero.insert(with_zero.begin(), 0.0);
            for (double d : with_zero) {
                if (left_interface || p.gamma == 0.0) {
                    t.check(unrelaxed_excess_log(AlgorithmId::DN2, d, p).sign > 0,
                            [&] { return describe_point("DN2 divergence", d, p); });
                    t.check(unrelaxed_excess_log(AlgorithmId::ND2, d, p).sign < 0 && rho_nd2(d, p) > 0.0,
                            [&] { return describe_point("ND2 contraction", d, p); });
                }
                if (p.gamma == 0.0) {
                    t.check(unrelaxed_excess_log(AlgorithmId::DN3, d, p).sign < 0 && rho_dn3(d, p) > 0.0,
                            [&] { return describe_point("DN3 contraction", d, p); });
                    t.check(unrelaxed_excess_log(AlgorithmId::ND3, d, p).sign > 0,
                            [&] { return describe_point("ND3 divergence", d, p); });
                }
            }
        });
        // Category I bounds on the built-in Laplacian, compared up to a few ulps.
        const double ulps = 1.0 + 8.0 * std::numeric_limits<double>::epsilon();
        for (int n : {8, 16, 32}) {
            const SpectralModel model = build_laplacian_1d(n);
            const std::vector<double> d(model.eigenvalues().begin(), model.eigenvalues().end());
            grid.for_each_params([&](ProblemParams p) {
                p.theta = 1.0;
                const ConvergenceReport dn1 = spectral_report(AlgorithmId::DN1, p, d);
                t.check(dn1.bound.has_value() && dn1.spectral_max <= *dn1.bound * ulps,
                        [&] { return describe_point("DN1 bound", n, p); });
                if (p.gamma == 0.0) {
                    const ConvergenceReport nd1 = spectral_report(AlgorithmId::ND1, p, d);
                    t.check(nd1.bound.has_value() && nd1.spectral_max <= *nd1.bound * ulps,
                            [&] { return describe_point("ND1 bound", n, p); });
                }
            });
        }
    });
}

/// Criterion 4: closed-form theta* brackets and agreement with the minimax search.
inline CheckResult theta_star_brackets() {
    return timed(4, "theta* brackets", 30.0, [](Tally& t) {
        std::vector<double> d;
        for (int i = 0; i < 400; ++i) d.push_back(std::pow(10.0, -2.0 + 4.0 * i / 399.0));
        double worst = 0.0;
        for (double nu : {1e-2, 1e-1, 1.0, 10.0}) {
            for (int k = 1; k <= 9; ++k) {
                ProblemParams p;
                p.nu = nu;
                p.gamma = 0.0;
                p.alpha = 0.1 * k;
                const ThetaStar dn2 = theta_star_closed_form(AlgorithmId::DN2, p);
                const ThetaStar nd2 = theta_star_closed_form(AlgorithmId::ND2, p);
                const ThetaStar dn3 = theta_star_closed_form(AlgorithmId::DN3, p);
                const ThetaStar nd3 = theta_star_closed_form(AlgorithmId::ND3, p);
                t.check(dn2.value < 0.5, [&] { return describe_point("theta*_DN2 < 0.5", 0.0, p); });
                t.check(nd2.value > 0.5 && nd2.value < 2.0 / 3.0,
                        [&] { return describe_point("theta*_ND2 in (0.5, 2/3)", 0.0, p); });
                t.check(nd3.value == dn2.value, [&] { return describe_point("theta*_ND3 == theta*_DN2", 0.0, p); });
                t.check(dn3.value == nd2.value, [&] { return describe_point("theta*_DN3 == theta*_ND2", 0.0, p); });
                t.check(dn2.proven && nd2.proven, [&] { return describe_point("gamma=0 marked proven", 0.0, p); });
                for (AlgorithmId id : {AlgorithmId::DN2, AlgorithmId::ND2, AlgorithmId::DN3, AlgorithmId::ND3}) {
                    const double closed = theta_star_closed_form(id, p).value;
                    const double numeric = theta_star_numeric(id, p, d).theta;
                    worst = std::max(worst, std::abs(numeric - closed));
                    t.check(std::abs(numeric - closed) <= 1e-3,
                            [&] { return describe_point(std::string(name(id)).c_str(), 0.0, p); });
                }
            }
        }
        std::ostringstream os;
        os << "worst |numeric - closed| " << worst;
        t.note(os.str());
    });
}

/// Criterion 5: d = 1e8 and d = 1e-9 against the limit formulas.
inline CheckResult limit_consistency() {
    return timed(5, "limit consistency", 2.0, [](Tally& t) {
        const PropertyGrid grid;
        grid.for_each_params([&](ProblemParams p) {
            for (double theta : {0.25, 0.5, 0.75, 1.0}) {
                p.theta = theta;
                for (AlgorithmId id : kAllAlgorithms) {
                    const double at_inf = rho(id, 1e8, p);
                    const double at_zero = rho(id, 1e-9, p);
                    t.check(std::abs(at_inf - rho_at_infinity(id, theta)) <= 1e-5,
                            [&] { return describe_point((std::string(name(id)) + " d->inf").c_str(), 1e8, p); });
                    t.check(std::abs(at_zero - rho_at_zero(id, p)) <= 1e-5,
                            [&] { return describe_point((std::string(name(id)) + " d->0").c_str(), 1e-9, p); });
                }
            }
        });
    });
}

/// Criterion 6: adjoint-only derivation of the DN1 factor.
inline CheckResult appendix_equivalence() {
    return timed(6, "DN1 adjoint-route equivalence", 1.0, [](Tally& t) {
        const PropertyGrid grid;
        double worst = 0.0;
        grid.for_each_params([&](ProblemParams p) {
            for (double theta : {0.3, 0.8, 1.0}) {
                p.theta = theta;
                std::vector<double> ds = grid.d;
                ds.push_back(0.0);
                for (double d : ds) {
                    const double rel = relative_difference(rho_dn1_via_mu(d, p), rho_dn1(d, p));
                    worst = std::max(worst, rel);
                    t.check(rel <= 1e-12, [&] { return describe_point("DN1 via mu", d, p); });
                }
            }
        });
        std::ostringstream os;
        os << "worst relative difference " << worst;
        t.note(os.str());
    });
}

/// Empirical order from errors on successively halved steps (least squares
/// of log error against log dt).
inline double empirical_order(const std::vector<double>& dts, const std::vector<double>& errors) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(dts.size());
    for (size_t i = 0; i < dts.size(); ++i) {
        const double x = std::log(dts[i]);
        const double y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Observed rate of a single-mode discrete run started from f0 = 1.
inline double single_mode_discrete_rate(AlgorithmId id, double d, const ProblemParams& p, int nt) {
    const DiscreteProblem problem =
        make_error_problem(SpectralModel::from_eigenvalues(Eigen::VectorXd::Constant(1, d)), p, nt);
    const DdResult r = dd_solve(problem, id, p.theta, Eigen::VectorXd::Ones(1), 40, 1e-11);
    return observed_rate(r.history);
}

/// Criterion 7: discrete rates vs the continuous analysis.
inline CheckResult discrete_rates(std::uint64_t seed) {
    return timed(7, "discrete-rate convergence", 60.0, [=](Tally& t) {
        struct Setting {
            double d, nu, gamma, alpha;
        };
        const std::array<Setting, 2> settings{{{2.0, 1.0, 0.0, 0.5}, {5.0, 0.1, 10.0, 0.7}}};
        const std::vector<double> dts{1e-2, 5e-3, 2.5e-3};
        double min_order = 1e300;
        for (const Setting& s : settings) {
            ProblemParams p;
            p.nu = s.nu;
            p.gamma = s.gamma;
            p.alpha = s.alpha;
            p.theta = 1.0;
            for (AlgorithmId id : kAllAlgorithms) {
                const double exact = iteration_ratio<double>(id, s.d, p);
                std::vector<double> errors;
                for (double dt : dts) {
                    const int nt = static_cast<int>(std::lround(p.T / dt));
                    errors.push_back(std::abs(single_mode_discrete_rate(id, s.d, p, nt) - exact));
                }
                const double order = empirical_order(dts, errors);
                min_order = std::min(min_order, order);
                t.check(order >= 1.5, [&] {
                    std::ostringstream os;
                    os << name(id) << " d=" << s.d << " nu=" << s.nu << " gamma=" << s.gamma << ": order " << order;
                    return os.str();
                });
            }
        }
        std::ostringstream notes;
        notes << "min single-mode order " << min_order;

        // Coupled Laplacian runs against the spectral max.
        ProblemParams p;
        p.nu = 0.1;
        p.gamma = 0.0;
        p.alpha = 0.5;
        p.theta = 1.0;
        const DiscreteProblem problem = make_error_problem(build_laplacian_1d(16), p, 1000);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal;
        Eigen::VectorXd f0(problem.n());
        for (Eigen::Index i = 0; i < f0.size(); ++i) f0[i] = normal(rng);
        const std::vector<double> d(problem.model.eigenvalues().begin(), problem.model.eigenvalues().end());
        for (AlgorithmId id : {AlgorithmId::DN1, AlgorithmId::ND1}) {
            const double predicted = spectral_report(id, problem.grid_params(), d).spectral_max;
            const DdResult r = dd_solve(problem, id, 1.0, f0, 60, 1e-12);
            const double observed = observed_rate(r.history);
            const double rel = std::abs(observed - predicted) / predicted;
            notes << "; " << name(id) << " observed " << observed << " vs predicted " << predicted;
            t.check(rel <= 0.05, [&] { return std::string(name(id)) + " Laplacian rate off by > 5%"; });
        }
        t.note(notes.str());
    });
}

/// Criterion 8: monolithic trace is a fixed point; converged runs glue to the
/// monolithic solution.
inline CheckResult fixed_point_and_gluing() {
    return timed(8, "fixed point and gluing", 30.0, [](Tally& t) {
        ProblemParams p;
        p.nu = 0.1;
        p.gamma = 1.0;
        p.alpha = 0.4;
        const DiscreteProblem problem = make_forced_problem(build_laplacian_1d(8), p, 200);
        const TrajectoryPair mono = monolithic_solve(problem);
        const double tol = 1e-10;
        const std::vector<double> d(problem.model.eigenvalues().begin(), problem.model.eigenvalues().end());
        std::ostringstream notes;
        double worst_fixed = 0.0, worst_glue = 0.0;
        for (AlgorithmId id : kAllAlgorithms) {
            const Eigen::VectorXd exact = monolithic_interface_datum(problem, id, mono);
            const DdResult fixed = dd_solve(problem, id, 1.0, exact, 1, 1e-9);
            worst_fixed = std::max(worst_fixed, fixed.history.residual_norms.front());
            t.check(fixed.status == DdStatus::converged && fixed.history.residual_norms.front() <= 1e-9,
                    [&] { return std::string(name(id)) + " fixed point residual too large"; });

            const ProblemParams gp = problem.grid_params();
            const double theta =
                category(id) == Category::I ? 1.0 : theta_star_numeric(id, gp, d).theta;
            const DdResult run = dd_solve(problem, id, theta, Eigen::VectorXd::Zero(problem.n()), 500, tol);
            const double dist = l2_distance(run.trajectory, mono, problem.grid.dt);
            worst_glue = std::max(worst_glue, dist);
            t.check(run.status == DdStatus::converged && dist <= 10.0 * tol, [&] {
                std::ostringstream os;
                os << name(id) << " theta=" << theta << " status " << tdd::name(run.status) << " L2 distance "
                   << dist;
                return os.str();
            });
        }
        notes << "worst fixed-point residual " << worst_fixed << "; worst glued L2 distance " << worst_glue;
        t.note(notes.str());
    });
}

/// Criterion 9: exchange symmetries at gamma = 0.
inline CheckResult symmetry_suite() {
    return timed(9, "symmetry suite", 2.0, [](Tally& t) {
        const PropertyGrid grid;
        double worst = 0.0;
        auto close = [&](double a, double b) {
            const double diff = std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
            worst = std::max(worst, diff);
            return diff <= 1e-12;
        };
        for (double nu : grid.nu) {
            for (double alpha : grid.alpha) {
                for (double theta : {0.3, 0.7, 1.0}) {
                    ProblemParams p;
                    p.nu = nu;
                    p.gamma = 0.0;
                    p.alpha = alpha;
                    p.theta = theta;
                    const ProblemParams mirrored = p.with_alpha(p.T - alpha);
                    const ProblemParams half = p.with_alpha(0.5 * p.T);
                    for (double d : grid.d) {
                        t.check(close(rho_dn2(d, p), rho_nd3(d, mirrored)),
                                [&] { return describe_point("DN2/ND3 exchange", d, p); });
                        t.check(close(rho_nd2(d, p), rho_dn3(d, mirrored)),
                                [&] { return describe_point("ND2/DN3 exchange", d, p); });
                        t.check(close(rho_dn1(d, half), rho_nd1(d, half)),
                                [&] { return describe_point("DN1/ND1 coincidence", d, half); });
                    }
                }
            }
        }
        std::ostringstream os;
        os << "worst scaled difference " << worst;
        t.note(os.str());
    });
}

inline std::vector<CheckResult> acceptance_suite(const AcceptanceOptions& options = {}) {
    return {figure_values(),
            oracle_equivalence(options.seed, options.oracle_samples),
            property_suite(),
            theta_star_brackets(),
            limit_consistency(),
            appendix_equivalence(),
            discrete_rates(options.seed),
            fixed_point_and_gluing(),
            symmetry_suite()};
}

}  // namespace verify
}  // namespace tdd
