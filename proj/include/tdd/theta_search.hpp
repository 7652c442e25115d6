#pragma once

#include "tdd/algorithm.hpp"
#include "tdd/errors.hpp"
#include "tdd/rho_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace tdd {

struct ThetaSearchOptions {
    /// Stand-in for d -> infinity in the augmented eigenvalue list.
    double large_d_proxy = 1e8;
    double grid_step = 1e-3;
    double refine_tolerance = 1e-9;
    /// Objective values closer than this are considered tied.
    double tie_tolerance = 1e-12;
};

struct ThetaSearchResult {
    double theta;
    /// max rho over the augmented list {0, eigenvalues, proxy} at theta.
    double rho;
};

namespace detail {

/// max_d |1 - theta + theta r(d)| for a set of precomputed responses.
inline double max_relaxed(std::span<const double> responses, double theta) {
    double worst = 0.0;
    for (double r : responses) worst = std::max(worst, std::abs(relaxed_gain(theta, r)));
    return worst;
}

/// Lexicographic objective: the augmented-set max first, then the max over
/// the user eigenvalues alone, then smaller theta.
struct ThetaObjective {
    std::vector<double> augmented;
    std::vector<double> user;
    double tie;

    struct Value {
        double primary;
        double secondary;
        double theta;
    };

    Value operator()(double theta) const {
        return {max_relaxed(augmented, theta), max_relaxed(user, theta), theta};
    }

    bool better(const Value& x, const Value& y) const {
        if (std::abs(x.primary - y.primary) > tie * std::max(1.0, y.primary)) return x.primary < y.primary;
        if (std::abs(x.secondary - y.secondary) > tie * std::max(1.0, y.secondary)) {
            return x.secondary < y.secondary;
        }
        return x.theta < y.theta;
    }
};

}  // namespace detail

/// Minimax relaxation over theta in (0, 1]: grid scan then golden-section
/// refinement inside the best grid cell.
inline ThetaSearchResult theta_star_numeric(AlgorithmId id, const ProblemParams& params,
                                            std::span<const double> eigenvalues, const ThetaSearchOptions& options = {}) {
    if (eigenvalues.empty()) throw Error(ErrorKind::invalid_input, "theta search needs a nonempty eigenvalue list");
    if (!(options.grid_step > 0.0 && options.grid_step <= 1.0)) {
        throw Error(ErrorKind::invalid_parameter, "theta grid step must lie in (0, 1]");
    }
    params.validate();

    detail::ThetaObjective objective;
    objective.tie = options.tie_tolerance;
    objective.user.reserve(eigenvalues.size());
    for (double d : eigenvalues) objective.user.push_back(interface_response(id, d, params));
    objective.augmented = objective.user;
    objective.augmented.push_back(interface_response(id, 0.0, params));
    objective.augmented.push_back(interface_response(id, options.large_d_proxy, params));

    const int cells = static_cast<int>(std::lround(1.0 / options.grid_step));
    auto best = objective(options.grid_step);
    for (int i = 2; i <= cells; ++i) {
        const auto candidate = objective(std::min(1.0, i * options.grid_step));
        if (objective.better(candidate, best)) best = candidate;
    }

    double lo = std::max(best.theta - options.grid_step, 0.5 * options.grid_step);
    double hi = std::min(best.theta + options.grid_step, 1.0);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    auto f1 = objective(x1);
    auto f2 = objective(x2);
    while (hi - lo > options.refine_tolerance) {
        if (objective.better(f2, f1)) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        }
    }
    for (const auto& candidate : {f1, f2, objective(0.5 * (lo + hi))}) {
        if (objective.better(candidate, best)) best = candidate;
    }
    return {best.theta, best.primary};
}

}  // namespace tdd
