#pragma once

#include "tdd/algorithm.hpp"
#include "tdd/errors.hpp"
#include "tdd/spectral_model.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

// Exact single-mode DD iteration on the error equations (y0 = 0, yhat = 0).
//
// Each subdomain carries one scalar u (z or mu) with u'' = sigma^2 u, solved
// from two linear rows: the outer boundary row and the interface row. A row
// c_v u + c_d u' is stored through plus = c_v + sigma c_d and
// minus = c_v - sigma c_d, which are the coefficients it induces on the
// exponential basis of ModalBvpSolution; every such pair below is written in
// cancellation-free form.

namespace tdd {

template <class Real = double>
struct ModalRow {
    Real plus{};
    Real minus{};
};

/// Row expressing an interface quantity in terms of the carried scalar.
///   z form:  y = z, y' = z', lambda = nu(z' + d z), lambda' = nu(sigma^2 z + d z')
///   mu form: lambda = mu, lambda' = mu', y = mu' - d mu, y' = sigma^2 mu - d mu'
template <class Real>
ModalRow<Real> quantity_row(ModalState state, InterfaceQuantity q, const ModalTriple<Real>& m, Real nu) {
    const Real s = m.sigma;
    const Real sum = m.sigma + m.d;
    const Real diff = m.sigma_minus_d();
    if (state == ModalState::z) {
        switch (q) {
            case InterfaceQuantity::state: return {Real(1), Real(1)};
            case InterfaceQuantity::state_rate: return {s, -s};
            case InterfaceQuantity::adjoint: return {nu * sum, -Real(1) / sum};
            case InterfaceQuantity::adjoint_rate: return {nu * s * sum, s / sum};
        }
    } else {
        switch (q) {
            case InterfaceQuantity::adjoint: return {Real(1), Real(1)};
            case InterfaceQuantity::adjoint_rate: return {s, -s};
            case InterfaceQuantity::state: return {diff, -sum};
            case InterfaceQuantity::state_rate: return {s * diff, s * sum};
        }
    }
    throw Error(ErrorKind::invalid_input, "unknown interface quantity");
}

/// Homogeneous outer row: side 1 gets y(0) = 0, side 2 gets lambda(T) + gamma y(T) = 0.
///   z form:  z(0) = 0,            omega z(T) + z'(T) = 0
///   mu form: mu'(0) - d mu(0) = 0, beta mu(T) + gamma mu'(T) = 0
template <class Real>
ModalRow<Real> outer_row(ModalState state, int side, const ModalTriple<Real>& m) {
    if (side == 1) {
        if (state == ModalState::z) return {Real(1), Real(1)};
        return {m.sigma_minus_d(), -(m.sigma + m.d)};
    }
    if (state == ModalState::z) return {m.omega + m.sigma, m.omega - m.sigma};
    return {Real(1) + m.gamma * m.sigma_minus_d(), Real(1) - m.gamma * (m.sigma + m.d)};
}

template <class Real = double>
struct ModalSubdomainSolution {
    ModalBvpSolution<Real> bvp;
    ModalTriple<Real> modes;
    Real nu{};
    AlgorithmId algorithm = AlgorithmId::DN1;

    ModalState formulation() const { return bvp.state; }
    int side() const { return bvp.side; }

    /// Interface-type quantity of this solution at time t (within the window).
    Real quantity(InterfaceQuantity q, Real t) const {
        const ModalRow<Real> row = quantity_row(bvp.state, q, modes, nu);
        return apply(row, t);
    }

    Real apply(const ModalRow<Real>& row, Real t) const {
        const Real decay = std::exp(-bvp.sigma * (t - bvp.t0));
        const Real grow = std::exp(bvp.sigma * (t - bvp.t1));
        return row.minus * bvp.p * decay + row.plus * bvp.q * grow;
    }
};

template <class Real = double>
ModalSubdomainSolution<Real> subdomain_solve(AlgorithmId id, int side, Real d, const ProblemParams& params,
                                             Real interface_datum) {
    if (side != 1 && side != 2) {
        throw Error(ErrorKind::invalid_input, "subdomain side must be 1 or 2, got " + std::to_string(side));
    }
    const ModalTriple<Real> m = modal_coefficients<Real>(d, params);
    const TransmissionPlan plan = transmission_plan(id);
    const ModalState state = plan.analysis_state;
    const Real nu = Real(params.nu);
    const Real alpha = Real(params.alpha);
    const Real T = Real(params.T);

    ModalSubdomainSolution<Real> sol;
    sol.modes = m;
    sol.nu = nu;
    sol.algorithm = id;
    sol.bvp.sigma = m.sigma;
    sol.bvp.state = state;
    sol.bvp.side = side;
    sol.bvp.t0 = side == 1 ? Real(0) : alpha;
    sol.bvp.t1 = side == 1 ? alpha : T;

    const ModalRow<Real> outer = outer_row(state, side, m);
    const ModalRow<Real> inner = quantity_row(state, interface_quantity(id, side), m, nu);
    const Real span_decay = std::exp(-m.sigma * (sol.bvp.t1 - sol.bvp.t0));

    // Rows in (p, q): a row at t0 is (minus, plus*e), at t1 (minus*e, plus).
    Real r11, r12, r21, r22;  // row 1 homogeneous, row 2 = datum
    r21 = side == 1 ? inner.minus * span_decay : inner.minus;
    r22 = side == 1 ? inner.plus : inner.plus * span_decay;
    r11 = side == 1 ? outer.minus : outer.minus * span_decay;
    r12 = side == 1 ? outer.plus * span_decay : outer.plus;
    const Real det = r11 * r22 - r12 * r21;
    if (det == Real(0) || !std::isfinite(static_cast<double>(det))) {
        throw Error(ErrorKind::factorization, "singular modal subdomain system for " + std::string(name(id)));
    }
    sol.bvp.p = -interface_datum * r12 / det;
    sol.bvp.q = interface_datum * r11 / det;
    return sol;
}

enum class ModalRunStatus { running, converged, diverged, max_iterations };

template <class Real = double>
struct ModalIterateState {
    Real f_alpha{};
    int k = 0;
    std::vector<Real> history;
    ModalRunStatus status = ModalRunStatus::running;

    static ModalIterateState start(Real f0) {
        ModalIterateState s;
        s.f_alpha = f0;
        s.history.push_back(f0);
        return s;
    }
};

/// Unrelaxed sweep: the trace read off the second-solved side for datum f.
template <class Real = double>
Real modal_sweep_trace(AlgorithmId id, Real d, const ProblemParams& params, Real f) {
    const TransmissionPlan plan = transmission_plan(id);
    const Real alpha = Real(params.alpha);
    const auto first = subdomain_solve<Real>(id, plan.first_side, d, params, f);
    const Real passed = first.quantity(plan.second_quantity, alpha);
    const auto second = subdomain_solve<Real>(id, 3 - plan.first_side, d, params, passed);
    return second.quantity(plan.first_quantity, alpha);
}

template <class Real = double>
ModalIterateState<Real> dd_step(AlgorithmId id, Real d, const ProblemParams& params, ModalIterateState<Real> state) {
    if (state.history.empty()) state.history.push_back(state.f_alpha);
    const Real theta = Real(params.theta);
    const Real trace = modal_sweep_trace<Real>(id, d, params, state.f_alpha);
    state.f_alpha = (Real(1) - theta) * state.f_alpha + theta * trace;
    state.k += 1;
    state.history.push_back(state.f_alpha);
    return state;
}

template <class Real = double>
Real iteration_ratio(AlgorithmId id, Real d, const ProblemParams& params) {
    return std::abs(dd_step<Real>(id, d, params, ModalIterateState<Real>::start(Real(1))).f_alpha);
}

/// Iterates until |f| <= tol |f0|, k_max steps, or |f| > 1e12 |f0|.
template <class Real = double>
ModalIterateState<Real> run_modal_dd(AlgorithmId id, Real d, const ProblemParams& params, Real f0, int k_max,
                                     Real tol) {
    if (k_max <= 0) throw Error(ErrorKind::invalid_input, "k_max must be positive");
    if (!(tol >= Real(0))) throw Error(ErrorKind::invalid_input, "tol must be non-negative");
    auto state = ModalIterateState<Real>::start(f0);
    const Real scale = std::abs(f0);
    if (scale == Real(0)) {
        state.status = ModalRunStatus::converged;
        return state;
    }
    while (state.k < k_max) {
        state = dd_step<Real>(id, d, params, std::move(state));
        const Real size = std::abs(state.f_alpha);
        if (size <= tol * scale) {
            state.status = ModalRunStatus::converged;
            return state;
        }
        if (size > Real(1e12) * scale || !std::isfinite(static_cast<double>(size))) {
            state.status = ModalRunStatus::diverged;
            return state;
        }
    }
    state.status = ModalRunStatus::max_iterations;
    return state;
}

/// Both modal states of a subdomain solution, recovered through
/// mu = nu(z' + d z) and z = mu' - d mu (zero target).
template <class Real = double>
struct ModalPairEvaluator {
    ModalSubdomainSolution<Real> solution;

    Real z(Real t) const { return eval(InterfaceQuantity::state, t); }
    Real z_dot(Real t) const { return eval(InterfaceQuantity::state_rate, t); }
    Real mu(Real t) const { return eval(InterfaceQuantity::adjoint, t); }
    Real mu_dot(Real t) const { return eval(InterfaceQuantity::adjoint_rate, t); }

private:
    Real eval(InterfaceQuantity q, Real t) const {
        const auto& b = solution.bvp;
        const Real d = solution.modes.d;
        const Real u = b.value(t);
        const Real du = b.derivative(t);
        const Real s2 = b.sigma * b.sigma;
        const Real nu = solution.nu;
        if (b.state == ModalState::z) {
            switch (q) {
                case InterfaceQuantity::state: return u;
                case InterfaceQuantity::state_rate: return du;
                case InterfaceQuantity::adjoint: return nu * (du + d * u);
                case InterfaceQuantity::adjoint_rate: return nu * (s2 * u + d * du);
            }
        } else {
            switch (q) {
                case InterfaceQuantity::adjoint: return u;
                case InterfaceQuantity::adjoint_rate: return du;
                case InterfaceQuantity::state: return du - d * u;
                case InterfaceQuantity::state_rate: return s2 * u - d * du;
            }
        }
        return Real(0);
    }
};

template <class Real = double>
ModalPairEvaluator<Real> reconstruct_pair(const ModalSubdomainSolution<Real>& solution) {
    return {solution};
}

}  // namespace tdd
