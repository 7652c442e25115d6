#pragma once

#include "tdd/algorithm.hpp"
#include "tdd/errors.hpp"
#include "tdd/hyperbolic.hpp"
#include "tdd/spectral_model.hpp"

#include <cmath>
#include <string>

// Closed-form convergence factors of the six time decompositions.
//
// Every algorithm is a scalar linear map per eigenvalue d of A:
//     f_new = (1 - theta) f + theta * r(d) f
// with r the theta-free interface response. rho(d) = |1 - theta + theta r(d)|
// is the printed |1 - theta(1 - K)| (Category I, r = K) or
// |1 - theta(1 + G)| (Categories II/III, r = -G).
//
// All hyperbolic factors appear as tanh/coth of a = sigma*alpha and
// b = sigma*(T - alpha); subtractive combinations such as sigma - d or
// coth(b) - 1 are rewritten exactly so that d up to 1e12 stays accurate.

namespace tdd {

namespace detail {

struct HyperbolicFactors {
    double tanh_a, tanh_b, coth_a, coth_b;
    double one_minus_tanh_b;  // 1 - tanh(b)
    double coth_b_minus_one;  // coth(b) - 1
};

inline HyperbolicFactors hyperbolic_factors(const ModalTriple<double>& m) {
    HyperbolicFactors h{};
    h.tanh_a = std::tanh(m.a);
    h.tanh_b = std::tanh(m.b);
    h.coth_a = coth(m.a);
    h.coth_b = coth(m.b);
    h.one_minus_tanh_b = -tanh_minus_one(m.b);
    h.coth_b_minus_one = coth_minus_one(m.b);
    return h;
}

// gamma*sigma + beta*tanh(b) = gamma*((sigma - d) + d(1 - tanh b)) + tanh b  (> 0)
inline double gs_plus_beta_tanh(const ModalTriple<double>& m, const HyperbolicFactors& h) {
    return m.gamma * (m.sigma_minus_d() + m.d * h.one_minus_tanh_b) + h.tanh_b;
}

// gamma*sigma + beta*coth(b) = gamma*((sigma - d) - d(coth b - 1)) + coth b
inline double gs_plus_beta_coth(const ModalTriple<double>& m, const HyperbolicFactors& h) {
    return m.gamma * (m.sigma_minus_d() - m.d * h.coth_b_minus_one) + h.coth_b;
}

// gamma*sigma*tanh(b) + beta = gamma*((sigma - d) - sigma(1 - tanh b)) + 1
inline double gs_tanh_plus_beta(const ModalTriple<double>& m, const HyperbolicFactors& h) {
    return m.gamma * (m.sigma_minus_d() - m.sigma * h.one_minus_tanh_b) + 1.0;
}

// gamma*sigma*coth(b) + beta = gamma*((sigma - d) + sigma(coth b - 1)) + 1  (> 0)
inline double gs_coth_plus_beta(const ModalTriple<double>& m, const HyperbolicFactors& h) {
    return m.gamma * (m.sigma_minus_d() + m.sigma * h.coth_b_minus_one) + 1.0;
}

inline double relaxed_gain(double theta, double response) { return (1.0 - theta) + theta * response; }

}  // namespace detail

/// theta-free interface response r(d): the factor the unrelaxed sweep
/// multiplies the interface datum by.
inline double interface_response(AlgorithmId id, double d, const ProblemParams& params) {
    const ModalTriple<double> m = modal_coefficients<double>(d, params);
    const detail::HyperbolicFactors h = detail::hyperbolic_factors(m);
    switch (id) {
        case AlgorithmId::DN1:
            return m.inv_nu * detail::gs_plus_beta_tanh(m, h) /
                   ((m.sigma + m.d * h.tanh_a) * (m.omega + m.sigma * h.tanh_b));
        case AlgorithmId::ND1:
            return m.inv_nu * detail::gs_plus_beta_coth(m, h) /
                   ((m.sigma + m.d * h.coth_a) * (m.omega + m.sigma * h.coth_b));
        case AlgorithmId::DN2:
            return -h.coth_a * (m.sigma * h.coth_b + m.omega) / (m.sigma + m.omega * h.coth_b);
        case AlgorithmId::ND2:
            return -h.tanh_a * (m.sigma * h.tanh_b + m.omega) / (m.sigma + m.omega * h.tanh_b);
        case AlgorithmId::DN3:
            return -(m.sigma + m.d * h.coth_a) / (m.sigma * h.coth_a + m.d) * detail::gs_coth_plus_beta(m, h) /
                   detail::gs_plus_beta_coth(m, h);
        case AlgorithmId::ND3:
            return -(m.sigma + m.d * h.tanh_a) / (m.sigma * h.tanh_a + m.d) * detail::gs_tanh_plus_beta(m, h) /
                   detail::gs_plus_beta_tanh(m, h);
    }
    return 0.0;
}

/// Signed per-eigenvalue multiplier of the relaxed interface update.
inline double interface_gain(AlgorithmId id, double d, const ProblemParams& params) {
    return detail::relaxed_gain(params.theta, interface_response(id, d, params));
}

inline double rho(AlgorithmId id, double d, const ProblemParams& params) {
    return std::abs(interface_gain(id, d, params));
}

inline double rho_dn1(double d, const ProblemParams& params) { return rho(AlgorithmId::DN1, d, params); }
inline double rho_nd1(double d, const ProblemParams& params) { return rho(AlgorithmId::ND1, d, params); }
inline double rho_dn2(double d, const ProblemParams& params) { return rho(AlgorithmId::DN2, d, params); }
inline double rho_nd2(double d, const ProblemParams& params) { return rho(AlgorithmId::ND2, d, params); }
inline double rho_dn3(double d, const ProblemParams& params) { return rho(AlgorithmId::DN3, d, params); }
inline double rho_nd3(double d, const ProblemParams& params) { return rho(AlgorithmId::ND3, d, params); }

/// rho(theta = 1) - 1 without cancellation, in signed-log form. Near
/// d -> infinity the factors of Categories II/III approach 1 by amounts like
/// coth(a) - 1 ~ 2 e^{-2a}, which rho() cannot resolve and which underflow
/// for a > ~350; every difference here is expanded in eps = coth - 1 and
/// delta = 1 - tanh carried as logarithms, so the sign is exact.
inline SignedLog<double> unrelaxed_excess_log(AlgorithmId id, double d, const ProblemParams& params) {
    using L = SignedLog<double>;
    if (category(id) == Category::I) {
        return L::from_value(std::abs(interface_response(id, d, params.with_theta(1.0))) - 1.0);
    }
    const double g = -interface_response(id, d, params.with_theta(1.0));
    if (g < 0.0) return L::from_value(-g - 1.0);

    const ModalTriple<double> m = modal_coefficients<double>(d, params);
    const detail::HyperbolicFactors h = detail::hyperbolic_factors(m);
    const L eps_a{log_coth_minus_one(m.a), 1};
    const L eps_b{log_coth_minus_one(m.b), 1};
    const L delta_a{log_one_minus_tanh(m.a), 1};
    const L delta_b{log_one_minus_tanh(m.b), 1};
    const L s = L::from_value(m.sigma);
    const L s_plus_omega = L::from_value(m.sigma + m.omega);
    // sigma - omega = (sigma - d) - gamma / nu
    const L s_minus_omega = L::from_value(m.sigma_minus_d() - m.gamma * m.inv_nu);
    const L sd = L::from_value(m.sigma_minus_d());
    switch (id) {
        case AlgorithmId::DN2:
            return (s_plus_omega * eps_a + s_minus_omega * eps_b + s * eps_a * eps_b) /
                   L::from_value(m.sigma + m.omega * h.coth_b);
        case AlgorithmId::ND2:
            return (s * delta_a * delta_b - s_plus_omega * delta_a - s_minus_omega * delta_b) /
                   L::from_value(m.sigma + m.omega * h.tanh_b);
        case AlgorithmId::DN3: {
            const L f1_minus_one = -(sd * eps_a / L::from_value(m.sigma * h.coth_a + m.d));
            const double den = detail::gs_plus_beta_coth(m, h);
            const L f2 = L::from_value(detail::gs_coth_plus_beta(m, h) / den);
            const L f2_minus_one = L::from_value((m.gamma * (m.sigma + m.d) - 1.0) / den) * eps_b;
            return f1_minus_one * f2 + f2_minus_one;
        }
        case AlgorithmId::ND3: {
            const L f1_minus_one = sd * delta_a / L::from_value(m.sigma * h.tanh_a + m.d);
            const double den = detail::gs_plus_beta_tanh(m, h);
            const L f2 = L::from_value(detail::gs_tanh_plus_beta(m, h) / den);
            const L f2_minus_one = L::from_value((1.0 - m.gamma * (m.sigma + m.d)) / den) * delta_b;
            return f1_minus_one * f2 + f2_minus_one;
        }
        default: break;
    }
    return {};
}

/// rho(theta = 1) - 1 as a double (may underflow to 0; use the sign of
/// unrelaxed_excess_log for strict comparisons).
inline double unrelaxed_excess(AlgorithmId id, double d, const ProblemParams& params) {
    return unrelaxed_excess_log(id, d, params).value();
}

/// DN1 factor obtained from the adjoint-only (Dirichlet-Robin) reading:
/// mu_1 = A(sigma cosh + d sinh)(t), mu_2 = B(gamma sigma cosh + beta sinh)(T - t),
/// mu_1(alpha) = f, the Robin datum sigma^2 mu - d mu' matched at alpha, and
/// the update reads mu_2(alpha). Coefficients are scaled by cosh(a), cosh(b).
inline double rho_dn1_via_mu(double d, const ProblemParams& params) {
    const ModalTriple<double> m = modal_coefficients<double>(d, params);
    const detail::HyperbolicFactors h = detail::hyperbolic_factors(m);
    const double f = 1.0;

    // Side 1: A cosh(a) from mu_1(alpha) = f.
    const double a_scaled = f / (m.sigma + m.d * h.tanh_a);
    // Robin datum sigma^2 mu_1 - d mu_1' at alpha, per unit cosh(a):
    // sigma * A cosh(a) * (sigma^2 - d^2) = sigma * A cosh(a) / nu.
    const double robin = m.sigma * a_scaled * m.inv_nu;

    // Side 2 basis at alpha (per unit cosh(b)) and its Robin image.
    const double basis = detail::gs_plus_beta_tanh(m, h);  // gamma sigma + beta tanh b
    // sigma^2 phi(alpha) - d phi'(alpha) = sigma [ (gamma sigma^2 + d beta) + sigma (beta + gamma d) tanh b ]
    //                                    = sigma [ omega + sigma tanh b ]
    const double basis_robin = m.sigma * (m.omega + m.sigma * h.tanh_b);
    const double b_scaled = robin / basis_robin;
    const double response = b_scaled * basis;
    return std::abs(detail::relaxed_gain(params.theta, response));
}

/// Exact d = 0 value. Category I is pinned at 1 for every theta and alpha.
inline double rho_at_zero(AlgorithmId id, const ProblemParams& params) {
    params.validate();
    if (category(id) == Category::I) return 1.0;
    const double s = std::sqrt(params.inv_nu());
    const double xa = s * params.alpha;
    const double xb = s * (params.T - params.alpha);
    const double gs = params.gamma * s;
    double gain = 0.0;  // 1 + G(0)
    const bool dirichlet_first_state =
        id == AlgorithmId::DN2 || id == AlgorithmId::ND3;  // share the coth expression
    if (dirichlet_first_state) {
        const double cb = coth(xb);
        gain = 1.0 + coth(xa) * (cb + gs) / (1.0 + gs * cb);
    } else {
        const double tb = std::tanh(xb);
        gain = 1.0 + std::tanh(xa) * (tb + gs) / (1.0 + gs * tb);
    }
    return std::abs(1.0 - params.theta * gain);
}

/// d -> infinity limit: |1 - theta| for Category I, |1 - 2 theta| otherwise.
inline double rho_at_infinity(AlgorithmId id, double theta) {
    return category(id) == Category::I ? std::abs(1.0 - theta) : std::abs(1.0 - 2.0 * theta);
}

/// Upper bound for DN1 at theta = 1: (1 + gamma sigma_min) / (nu d_min^2).
inline double bound_dn1(const ProblemParams& params, double d_min) {
    params.validate();
    if (!(d_min > 0.0)) {
        throw Error(ErrorKind::bound_undefined, "DN1 bound needs d_min > 0, got " + std::to_string(d_min));
    }
    const double sigma_min = std::hypot(d_min, std::sqrt(params.inv_nu()));
    return (1.0 + params.gamma * sigma_min) / (params.nu * d_min * d_min);
}

/// Upper bound for ND1 at theta = 1 and gamma = 0:
/// coth(sigma_min (T - alpha)) / (nu (sigma_min + d_min)^2).
inline double bound_nd1(const ProblemParams& params, double d_min) {
    params.validate();
    if (params.gamma != 0.0) {
        throw Error(ErrorKind::bound_not_applicable, "ND1 bound holds only for gamma = 0");
    }
    if (!(d_min >= 0.0)) {
        throw Error(ErrorKind::bound_undefined, "ND1 bound needs d_min >= 0, got " + std::to_string(d_min));
    }
    const double sigma_min = std::hypot(d_min, std::sqrt(params.inv_nu()));
    const double sum = sigma_min + d_min;
    return coth(sigma_min * (params.T - params.alpha)) / (params.nu * sum * sum);
}

struct ThetaStar {
    double value;
    /// true when gamma = 0, where monotonicity in d makes the
    /// equioscillation value provably optimal; otherwise heuristic.
    bool proven;
};

/// Equioscillation relaxation 2 / (2 + Q), Q = 1 + G(0) the d = 0 gain.
/// DN3 shares ND2's value and ND3 shares DN2's.
inline ThetaStar theta_star_closed_form(AlgorithmId id, const ProblemParams& params) {
    if (category(id) == Category::I) {
        throw Error(ErrorKind::not_applicable,
                    std::string(name(id)) + " has no equioscillation formula (d = 0 factor is 1 for every theta)");
    }
    const double q = 1.0 + rho_at_zero(id, params.with_theta(1.0));
    return {2.0 / (2.0 + q), params.gamma == 0.0};
}

}  // namespace tdd
