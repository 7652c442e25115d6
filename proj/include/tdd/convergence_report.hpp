#pragma once

#include "tdd/algorithm.hpp"
#include "tdd/errors.hpp"
#include "tdd/rho_analysis.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace tdd {

struct ConvergenceReport {
    AlgorithmId algorithm = AlgorithmId::DN1;
    std::vector<std::pair<double, double>> per_eigenvalue;  // (d, rho(d)) in input order
    double spectral_max = 0.0;
    double rho_at_zero = 0.0;
    double rho_at_inf = 0.0;
    double theta_used = 1.0;
    /// Category I only, when its hypothesis holds for the given data.
    std::optional<double> bound;
};

inline ConvergenceReport spectral_report(AlgorithmId id, const ProblemParams& params,
                                         std::span<const double> eigenvalues) {
    if (eigenvalues.empty()) throw Error(ErrorKind::invalid_input, "spectral report needs eigenvalues");
    params.validate();
    ConvergenceReport report;
    report.algorithm = id;
    report.theta_used = params.theta;
    report.per_eigenvalue.reserve(eigenvalues.size());
    for (double d : eigenvalues) {
        const double value = rho(id, d, params);
        report.per_eigenvalue.emplace_back(d, value);
        report.spectral_max = std::max(report.spectral_max, value);
    }
    report.rho_at_zero = tdd::rho_at_zero(id, params);
    report.rho_at_inf = rho_at_infinity(id, params.theta);

    const double d_min = *std::min_element(eigenvalues.begin(), eigenvalues.end());
    if (id == AlgorithmId::DN1 && d_min > 0.0) {
        report.bound = bound_dn1(params, d_min);
    } else if (id == AlgorithmId::ND1 && params.gamma == 0.0 && d_min >= 0.0) {
        report.bound = bound_nd1(params, d_min);
    }
    return report;
}

}  // namespace tdd
