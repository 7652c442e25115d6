#pragma once

#include "tdd/algorithm.hpp"
#include "tdd/banded.hpp"
#include "tdd/errors.hpp"
#include "tdd/parallel.hpp"
#include "tdd/spectral_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Fully discrete forward-backward optimality system
//     y' + A y - lambda / nu = 0,   lambda' - A lambda - y = -yhat,
//     y(0) = y0,                    lambda(T) + gamma y(T) = gamma yhat(T),
// on a uniform grid, solved either in one shot or by a two-subdomain
// DN/ND iteration with the interface node duplicated in both subdomains.

namespace tdd {

enum class TimeScheme { implicit_euler, trapezoidal };

inline std::string_view name(TimeScheme s) {
    return s == TimeScheme::trapezoidal ? "trapezoidal" : "implicit-euler";
}

inline TimeScheme parse_scheme(std::string_view text) {
    if (text == "trapezoidal" || text == "crank-nicolson") return TimeScheme::trapezoidal;
    if (text == "implicit-euler" || text == "implicit_euler") return TimeScheme::implicit_euler;
    throw Error(ErrorKind::invalid_input, "unknown time scheme '" + std::string(text) + "'");
}

struct TimeGrid {
    int nt = 0;
    double dt = 0.0;
    int interface_index = 0;
    double requested_alpha = 0.0;

    double alpha() const { return interface_index * dt; }
    double time(int j) const { return j * dt; }
    /// True when the requested interface was moved onto the grid.
    bool snapped() const { return std::abs(alpha() - requested_alpha) > 1e-12 * std::max(1.0, requested_alpha); }
};

/// Uniform grid with alpha snapped to the nearest node, kept in [1, nt - 1].
inline TimeGrid make_time_grid(double T, int nt, double alpha) {
    if (nt < 2) throw Error(ErrorKind::invalid_dimension, "time grid needs nt >= 2");
    if (!(T > 0.0)) throw Error(ErrorKind::invalid_parameter, "T must be > 0");
    TimeGrid g;
    g.nt = nt;
    g.dt = T / nt;
    g.requested_alpha = alpha;
    const long m = std::lround(alpha / g.dt);
    g.interface_index = static_cast<int>(std::clamp<long>(m, 1, nt - 1));
    return g;
}

/// Columns are time nodes; rows are spatial components.
struct TrajectoryPair {
    Eigen::MatrixXd y;
    Eigen::MatrixXd lambda;
    int first_node = 0;

    int nodes() const { return static_cast<int>(y.cols()); }
};

struct DiscreteProblem {
    SpectralModel model;
    ProblemParams params;
    TimeGrid grid;
    Eigen::VectorXd y0;
    Eigen::MatrixXd yhat;  // n x (nt + 1)
    TimeScheme scheme = TimeScheme::trapezoidal;

    Eigen::Index n() const { return model.size(); }

    /// params with alpha replaced by the snapped grid interface.
    ProblemParams grid_params() const { return params.with_alpha(grid.alpha()); }

    void validate() const {
        params.validate();
        const Eigen::Index n = model.size();
        if (y0.size() != n) throw Error(ErrorKind::invalid_dimension, "y0 length does not match A");
        if (yhat.rows() != n || yhat.cols() != grid.nt + 1) {
            throw Error(ErrorKind::invalid_dimension, "yhat must be n x (nt + 1)");
        }
        if (grid.nt < 2 || grid.interface_index < 1 || grid.interface_index > grid.nt - 1) {
            throw Error(ErrorKind::invalid_dimension, "bad time grid");
        }
    }
};

/// Error-equation problem: y0 = 0 and yhat = 0.
inline DiscreteProblem make_error_problem(SpectralModel model, const ProblemParams& params, int nt,
                                          TimeScheme scheme = TimeScheme::trapezoidal) {
    const Eigen::Index n = model.size();
    DiscreteProblem p{std::move(model), params, make_time_grid(params.T, nt, params.alpha),
                      Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, nt + 1), scheme};
    p.validate();
    return p;
}

namespace detail {

enum class EndKind { initial, final_condition, transmission };

struct EndCondition {
    EndKind kind = EndKind::initial;
    InterfaceQuantity quantity = InterfaceQuantity::state;
};

inline Eigen::Index node_offset(Eigen::Index n, int local) { return 2 * n * local; }

/// Coefficients (C_y, C_lambda) and yhat shift of an interface quantity:
/// q = C_y y + C_lambda lambda - shift * yhat.
struct QuantityRow {
    Eigen::MatrixXd cy;
    Eigen::MatrixXd cl;
    double yhat_shift;
};

inline QuantityRow quantity_coefficients(InterfaceQuantity q, const Eigen::MatrixXd& A, double inv_nu) {
    const Eigen::Index n = A.rows();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, n);
    switch (q) {
        case InterfaceQuantity::state: return {I, Z, 0.0};
        case InterfaceQuantity::adjoint: return {Z, I, 0.0};
        case InterfaceQuantity::state_rate: return {-A, inv_nu * I, 0.0};
        case InterfaceQuantity::adjoint_rate: return {I, A, 1.0};
    }
    throw Error(ErrorKind::invalid_input, "unknown interface quantity");
}

/// Banded system for nodes [j0, j1] with given end conditions. Unknowns per
/// node are [y_j, lambda_j]; rows are: left end (n), two n-blocks per step,
/// right end (n).
class WindowSystem {
public:
    WindowSystem(const DiscreteProblem& p, int j0, int j1, EndCondition left, EndCondition right)
        : problem_(&p), j0_(j0), j1_(j1), left_(left), right_(right) {
        const Eigen::Index n = p.n();
        const int steps = j1 - j0;
        const lapack_int size = static_cast<lapack_int>(2 * n * (steps + 1));
        const lapack_int band = static_cast<lapack_int>(3 * n - 1);
        BandedMatrix M(size, band, band);
        const Eigen::MatrixXd& A = p.model.matrix();
        const double dt = p.grid.dt;
        const double inv_nu = p.params.inv_nu();

        add_end(M, 0, 0, left);
        for (int l = 0; l < steps; ++l) {
            const Eigen::Index row = n + 2 * n * l;
            const Eigen::Index c0 = node_offset(n, l);
            const Eigen::Index c1 = node_offset(n, l + 1);
            // weights of node j and j+1 in the A / coupling terms
            double ws0, ws1, wa0, wa1;
            if (p.scheme == TimeScheme::trapezoidal) {
                ws0 = ws1 = wa0 = wa1 = 0.5 * dt;
            } else {
                ws0 = 0.0;
                ws1 = dt;
                wa0 = dt;
                wa1 = 0.0;
            }
            for (Eigen::Index i = 0; i < n; ++i) {
                // state: y_{j+1} - y_j + A(ws0 y_j + ws1 y_{j+1}) - inv_nu(ws0 l_j + ws1 l_{j+1}) = 0
                const Eigen::Index rs = row + i;
                M.add(rs, c1 + i, 1.0);
                M.add(rs, c0 + i, -1.0);
                if (ws0 != 0.0) M.add(rs, c0 + n + i, -inv_nu * ws0);
                if (ws1 != 0.0) M.add(rs, c1 + n + i, -inv_nu * ws1);
                // adjoint: l_{j+1} - l_j - A(wa0 l_j + wa1 l_{j+1}) - (wa0 y_j + wa1 y_{j+1}) = -(wa0 yh_j + wa1 yh_{j+1})
                const Eigen::Index ra = row + n + i;
                M.add(ra, c1 + n + i, 1.0);
                M.add(ra, c0 + n + i, -1.0);
                if (wa0 != 0.0) M.add(ra, c0 + i, -wa0);
                if (wa1 != 0.0) M.add(ra, c1 + i, -wa1);
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double a = A(i, k);
                    if (a == 0.0) continue;
                    if (ws0 != 0.0) M.add(rs, c0 + k, ws0 * a);
                    if (ws1 != 0.0) M.add(rs, c1 + k, ws1 * a);
                    if (wa0 != 0.0) M.add(ra, c0 + n + k, -wa0 * a);
                    if (wa1 != 0.0) M.add(ra, c1 + n + k, -wa1 * a);
                }
            }
        }
        add_end(M, n + 2 * n * steps, steps, right);
        matrix_ = std::make_shared<const BandedMatrix>(M);
        lu_ = std::make_shared<const BandedLU>(std::move(M));

        // Data-independent part of the right-hand side.
        base_rhs_ = Eigen::VectorXd::Zero(size);
        const Eigen::MatrixXd& yhat = p.yhat;
        for (int l = 0; l < steps; ++l) {
            const int j = j0 + l;
            const Eigen::Index row = n + 2 * n * l + n;
            const Eigen::VectorXd forcing = p.scheme == TimeScheme::trapezoidal
                                                ? Eigen::VectorXd(-0.5 * dt * (yhat.col(j) + yhat.col(j + 1)))
                                                : Eigen::VectorXd(-dt * yhat.col(j));
            base_rhs_.segment(row, n) = forcing;
        }
        fill_fixed_end(0, j0_, left_);
        fill_fixed_end(n + 2 * n * steps, j1_, right_);
    }

    int first_node() const { return j0_; }
    int last_node() const { return j1_; }

    /// Solves with the given transmission data (ignored when neither end is
    /// a transmission row).
    TrajectoryPair solve(const Eigen::VectorXd& data) const {
        const DiscreteProblem& p = *problem_;
        const Eigen::Index n = p.n();
        Eigen::VectorXd rhs = base_rhs_;
        const int steps = j1_ - j0_;
        if (left_.kind == EndKind::transmission) fill_transmission(rhs, 0, j0_, left_, data);
        if (right_.kind == EndKind::transmission) fill_transmission(rhs, n + 2 * n * steps, j1_, right_, data);
        lu_->solve_in_place(rhs.data());
        if (!rhs.allFinite()) throw Error(ErrorKind::factorization, "subdomain solve produced non-finite values");
        TrajectoryPair out;
        out.first_node = j0_;
        out.y.resize(n, steps + 1);
        out.lambda.resize(n, steps + 1);
        for (int l = 0; l <= steps; ++l) {
            out.y.col(l) = rhs.segment(node_offset(n, l), n);
            out.lambda.col(l) = rhs.segment(node_offset(n, l) + n, n);
        }
        return out;
    }

    /// max_i |(M x - b)_i| / max(1, max|b|, max|M||x|) for a given window trajectory.
    double relative_residual(const TrajectoryPair& t, const Eigen::VectorXd& data) const {
        const DiscreteProblem& p = *problem_;
        const Eigen::Index n = p.n();
        const int steps = j1_ - j0_;
        std::vector<double> x(static_cast<size_t>(2 * n * (steps + 1)));
        for (int l = 0; l <= steps; ++l) {
            for (Eigen::Index i = 0; i < n; ++i) {
                x[node_offset(n, l) + i] = t.y(i, l);
                x[node_offset(n, l) + n + i] = t.lambda(i, l);
            }
        }
        Eigen::VectorXd rhs = base_rhs_;
        if (left_.kind == EndKind::transmission) fill_transmission(rhs, 0, j0_, left_, data);
        if (right_.kind == EndKind::transmission) fill_transmission(rhs, n + 2 * n * steps, j1_, right_, data);
        const std::vector<double> mx = matrix_->multiply(x);
        double worst = 0.0, scale = 1.0;
        for (size_t i = 0; i < mx.size(); ++i) {
            worst = std::max(worst, std::abs(mx[i] - rhs[static_cast<Eigen::Index>(i)]));
            scale = std::max({scale, std::abs(rhs[static_cast<Eigen::Index>(i)]), std::abs(x[i])});
        }
        return worst / scale;
    }

private:
    void add_end(BandedMatrix& M, Eigen::Index row, int local, EndCondition end) const {
        const DiscreteProblem& p = *problem_;
        const Eigen::Index n = p.n();
        const Eigen::Index c = node_offset(n, local);
        switch (end.kind) {
            case EndKind::initial:
                for (Eigen::Index i = 0; i < n; ++i) M.add(row + i, c + i, 1.0);
                break;
            case EndKind::final_condition:
                for (Eigen::Index i = 0; i < n; ++i) {
                    M.add(row + i, c + n + i, 1.0);
                    if (p.params.gamma != 0.0) M.add(row + i, c + i, p.params.gamma);
                }
                break;
            case EndKind::transmission: {
                const QuantityRow q = quantity_coefficients(end.quantity, p.model.matrix(), p.params.inv_nu());
                for (Eigen::Index i = 0; i < n; ++i) {
                    for (Eigen::Index k = 0; k < n; ++k) {
                        if (q.cy(i, k) != 0.0) M.add(row + i, c + k, q.cy(i, k));
                        if (q.cl(i, k) != 0.0) M.add(row + i, c + n + k, q.cl(i, k));
                    }
                }
                break;
            }
        }
    }

    void fill_fixed_end(Eigen::Index row, int node, EndCondition end) {
        const DiscreteProblem& p = *problem_;
        const Eigen::Index n = p.n();
        if (end.kind == EndKind::initial) base_rhs_.segment(row, n) = p.y0;
        if (end.kind == EndKind::final_condition) base_rhs_.segment(row, n) = p.params.gamma * p.yhat.col(node);
    }

    void fill_transmission(Eigen::VectorXd& rhs, Eigen::Index row, int node, EndCondition end,
                           const Eigen::VectorXd& data) const {
        const DiscreteProblem& p = *problem_;
        const Eigen::Index n = p.n();
        if (data.size() != n) throw Error(ErrorKind::invalid_dimension, "interface data length does not match A");
        rhs.segment(row, n) = data;
        if (end.quantity == InterfaceQuantity::adjoint_rate) rhs.segment(row, n) += p.yhat.col(node);
    }

    const DiscreteProblem* problem_;
    int j0_, j1_;
    EndCondition left_, right_;
    std::shared_ptr<const BandedMatrix> matrix_;
    std::shared_ptr<const BandedLU> lu_;
    Eigen::VectorXd base_rhs_;
};

}  // namespace detail

/// Interface quantity of a trajectory at global node j.
inline Eigen::VectorXd interface_trace(const DiscreteProblem& p, const TrajectoryPair& t, InterfaceQuantity q,
                                       int node) {
    const int l = node - t.first_node;
    if (l < 0 || l >= t.nodes()) throw Error(ErrorKind::invalid_dimension, "node outside trajectory window");
    const auto row = detail::quantity_coefficients(q, p.model.matrix(), p.params.inv_nu());
    Eigen::VectorXd v = row.cy * t.y.col(l) + row.cl * t.lambda.col(l);
    if (row.yhat_shift != 0.0) v -= p.yhat.col(node);
    return v;
}

/// One-shot banded solve of the whole time horizon.
inline TrajectoryPair monolithic_solve(const DiscreteProblem& problem) {
    problem.validate();
    const detail::WindowSystem system(problem, 0, problem.grid.nt, {detail::EndKind::initial, {}},
                                      {detail::EndKind::final_condition, {}});
    return system.solve(Eigen::VectorXd());
}

/// max relative row residual of the monolithic system for a full trajectory.
inline double discrete_residual(const DiscreteProblem& problem, const TrajectoryPair& t) {
    const detail::WindowSystem system(problem, 0, problem.grid.nt, {detail::EndKind::initial, {}},
                                      {detail::EndKind::final_condition, {}});
    return system.relative_residual(t, Eigen::VectorXd());
}

/// Factored subdomain operator of one side of an algorithm; reusable across
/// iterations and shareable between threads.
class SubdomainSolver {
public:
    SubdomainSolver(const DiscreteProblem& problem, int side, AlgorithmId id)
        : system_(make(problem, side, id)), side_(side) {}

    TrajectoryPair solve(const Eigen::VectorXd& data) const { return system_.solve(data); }
    int side() const { return side_; }

private:
    static detail::WindowSystem make(const DiscreteProblem& problem, int side, AlgorithmId id) {
        problem.validate();
        const int m = problem.grid.interface_index;
        const detail::EndCondition interface{detail::EndKind::transmission, interface_quantity(id, side)};
        if (side == 1) return {problem, 0, m, {detail::EndKind::initial, {}}, interface};
        if (side == 2) return {problem, m, problem.grid.nt, interface, {detail::EndKind::final_condition, {}}};
        throw Error(ErrorKind::invalid_input, "subdomain side must be 1 or 2, got " + std::to_string(side));
    }

    detail::WindowSystem system_;
    int side_;
};

inline TrajectoryPair subdomain_solve_discrete(const DiscreteProblem& problem, int side, AlgorithmId id,
                                               const Eigen::VectorXd& interface_data) {
    return SubdomainSolver(problem, side, id).solve(interface_data);
}

struct IterationHistory {
    std::vector<Eigen::VectorXd> interface_values;  // f^0, f^1, ...
    std::vector<double> residual_norms;             // |f^k - f^{k-1}|
    std::vector<double> error_norms;                // L2 error of the k-th glued iterate
    std::optional<double> observed_rate;

    int iterations() const { return static_cast<int>(residual_norms.size()); }
};

enum class DdStatus { converged, diverged, max_iterations };

inline std::string_view name(DdStatus s) {
    switch (s) {
        case DdStatus::converged: return "converged";
        case DdStatus::diverged: return "diverged";
        case DdStatus::max_iterations: return "max_iterations";
    }
    return "?";
}

struct DdResult {
    TrajectoryPair trajectory;
    IterationHistory history;
    DdStatus status = DdStatus::max_iterations;
};

struct DdOptions {
    /// Reference used for per-iteration error norms; none disables them.
    const TrajectoryPair* reference = nullptr;
    double divergence_factor = 1e12;
};

/// Least-squares rate exp(slope) of log residuals over the last max(4, k/2).
inline double observed_rate(const IterationHistory& history) {
    std::vector<double> logs;
    for (double r : history.residual_norms) logs.push_back(r);
    const int k = static_cast<int>(logs.size());
    if (k < 4) throw Error(ErrorKind::too_few_iterations, "observed rate needs >= 4 residuals, got " + std::to_string(k));
    const int window = std::max(4, k / 2);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = k - window; i < k; ++i) {
        if (!(logs[i] > 0.0)) {
            throw Error(ErrorKind::too_few_iterations, "observed rate needs positive residuals in the fit window");
        }
        const double x = i;
        const double y = std::log(logs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double w = window;
    const double slope = (w * sxy - sx * sy) / (w * sxx - sx * sx);
    return std::exp(slope);
}

/// Discrete L2(0,T) distance of two full trajectories (trapezoid weights).
inline double l2_distance(const TrajectoryPair& a, const TrajectoryPair& b, double dt) {
    const int nodes = a.nodes();
    if (b.nodes() != nodes || a.y.rows() != b.y.rows()) {
        throw Error(ErrorKind::invalid_dimension, "trajectory shapes differ");
    }
    double sum = 0.0;
    for (int j = 0; j < nodes; ++j) {
        const double w = (j == 0 || j == nodes - 1) ? 0.5 : 1.0;
        sum += w * ((a.y.col(j) - b.y.col(j)).squaredNorm() + (a.lambda.col(j) - b.lambda.col(j)).squaredNorm());
    }
    return std::sqrt(dt * sum);
}

/// Nodes [0, m) from side 1 and [m, nt] from side 2.
inline TrajectoryPair glue(const TrajectoryPair& side1, const TrajectoryPair& side2) {
    const int m = side2.first_node;
    const Eigen::Index n = side1.y.rows();
    TrajectoryPair out;
    out.y.resize(n, m + side2.nodes());
    out.lambda.resize(n, m + side2.nodes());
    out.y.leftCols(m) = side1.y.leftCols(m);
    out.lambda.leftCols(m) = side1.lambda.leftCols(m);
    out.y.rightCols(side2.nodes()) = side2.y;
    out.lambda.rightCols(side2.nodes()) = side2.lambda;
    return out;
}

namespace detail {

struct Sweep {
    TrajectoryPair side1;
    TrajectoryPair side2;
    Eigen::VectorXd trace;
};

inline Sweep sweep(const DiscreteProblem& p, AlgorithmId id, const SubdomainSolver& s1, const SubdomainSolver& s2,
                   const Eigen::VectorXd& f) {
    const TransmissionPlan plan = transmission_plan(id);
    const int m = p.grid.interface_index;
    const SubdomainSolver& first = plan.first_side == 1 ? s1 : s2;
    const SubdomainSolver& second = plan.first_side == 1 ? s2 : s1;
    TrajectoryPair a = first.solve(f);
    TrajectoryPair b = second.solve(interface_trace(p, a, plan.second_quantity, m));
    Eigen::VectorXd trace = interface_trace(p, b, plan.first_quantity, m);
    if (plan.first_side == 1) return {std::move(a), std::move(b), std::move(trace)};
    return {std::move(b), std::move(a), std::move(trace)};
}

}  // namespace detail

/// The exact monolithic interface datum for an algorithm (first_quantity at
/// the interface node), i.e. the fixed point of the DD update.
inline Eigen::VectorXd monolithic_interface_datum(const DiscreteProblem& p, AlgorithmId id,
                                                  const TrajectoryPair& mono) {
    return interface_trace(p, mono, transmission_plan(id).first_quantity, p.grid.interface_index);
}

/// Smooth driven problem: y0 = sin(pi x), yhat = x(1 - x)(1 + t) with
/// x = (i + 1)/(n + 1) the node coordinate of component i.
inline DiscreteProblem make_forced_problem(SpectralModel model, const ProblemParams& params, int nt,
                                           TimeScheme scheme = TimeScheme::trapezoidal) {
    DiscreteProblem problem = make_error_problem(std::move(model), params, nt, scheme);
    const Eigen::Index n = problem.n();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = static_cast<double>(i + 1) / static_cast<double>(n + 1);
        problem.y0[i] = std::sin(std::numbers::pi * x);
        for (int j = 0; j <= nt; ++j) problem.yhat(i, j) = x * (1.0 - x) * (1.0 + problem.grid.time(j));
    }
    return problem;
}

/// Per-iteration growth factor: the fitted rate with at least four
/// residuals, else the last residual ratio, else NaN.
inline double growth_rate(const IterationHistory& history) {
    const int k = history.iterations();
    if (k >= 4) return observed_rate(history);
    if (k >= 2 && history.residual_norms[k - 2] > 0.0) {
        return history.residual_norms[k - 1] / history.residual_norms[k - 2];
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// Vector-valued relaxed DD iteration on the coupled system; stops when
/// |f^k - f^{k-1}| <= tol, after k_max sweeps, or when the residual exceeds
/// divergence_factor times the first one.
inline DdResult dd_solve(const DiscreteProblem& problem, AlgorithmId id, double theta, const Eigen::VectorXd& f0,
                         int k_max, double tol, const DdOptions& options = {}) {
    problem.validate();
    if (k_max <= 0) throw Error(ErrorKind::invalid_input, "k_max must be positive");
    if (!(tol > 0.0)) throw Error(ErrorKind::invalid_input, "tol must be > 0");
    if (!(theta > 0.0 && theta < 2.0)) throw Error(ErrorKind::invalid_parameter, "theta must lie in (0, 2)");
    if (f0.size() != problem.n()) throw Error(ErrorKind::invalid_dimension, "f0 length does not match A");

    const SubdomainSolver s1(problem, 1, id);
    const SubdomainSolver s2(problem, 2, id);
    DdResult result;
    Eigen::VectorXd f = f0;
    result.history.interface_values.push_back(f);
    double first_residual = 0.0;
    detail::Sweep last;
    for (int k = 1; k <= k_max; ++k) {
        last = detail::sweep(problem, id, s1, s2, f);
        const Eigen::VectorXd next = (1.0 - theta) * f + theta * last.trace;
        const double residual = (next - f).norm();
        f = next;
        result.history.interface_values.push_back(f);
        result.history.residual_norms.push_back(residual);
        if (options.reference != nullptr) {
            result.history.error_norms.push_back(
                l2_distance(glue(last.side1, last.side2), *options.reference, problem.grid.dt));
        }
        if (k == 1) first_residual = residual;
        if (residual <= tol) {
            result.status = DdStatus::converged;
            break;
        }
        if (!std::isfinite(residual) || residual > options.divergence_factor * first_residual) {
            result.status = DdStatus::diverged;
            break;
        }
    }
    if (result.status != DdStatus::diverged) {
        // Glue the subdomain solutions driven by the final datum.
        last = detail::sweep(problem, id, s1, s2, f);
    }
    result.trajectory = glue(last.side1, last.side2);
    if (result.history.iterations() >= 4) {
        try {
            result.history.observed_rate = observed_rate(result.history);
        } catch (const Error&) {
            result.history.observed_rate.reset();
        }
    }
    return result;
}

struct PerModeResult : DdResult {
    std::vector<IterationHistory> mode_histories;
    std::vector<DdStatus> mode_status;
};

/// Diagonalized variant: n independent scalar DD runs (each to tol/sqrt(n))
/// executed in parallel, transformed back with P. The combined residual of
/// iteration k is the Euclidean norm of the per-mode residuals.
inline PerModeResult dd_solve_per_mode(const DiscreteProblem& problem, AlgorithmId id, double theta,
                                       const Eigen::VectorXd& f0, int k_max, double tol, int jobs = 0) {
    problem.validate();
    if (f0.size() != problem.n()) throw Error(ErrorKind::invalid_dimension, "f0 length does not match A");
    const Eigen::Index n = problem.n();
    const Eigen::MatrixXd& P = problem.model.eigenvectors();
    const Eigen::VectorXd& d = problem.model.eigenvalues();
    const Eigen::VectorXd g0 = P.transpose() * f0;
    const Eigen::VectorXd y0 = P.transpose() * problem.y0;
    const Eigen::MatrixXd yhat = P.transpose() * problem.yhat;
    const double mode_tol = tol / std::sqrt(static_cast<double>(n));

    std::vector<DdResult> modes(static_cast<size_t>(n));
    parallel_for_index(static_cast<size_t>(n), jobs, [&](size_t i) {
        const auto ii = static_cast<Eigen::Index>(i);
        DiscreteProblem scalar{SpectralModel::from_eigenvalues(Eigen::VectorXd::Constant(1, d[ii])),
                               problem.params,
                               problem.grid,
                               y0.segment(ii, 1),
                               yhat.row(ii),
                               problem.scheme};
        modes[i] = dd_solve(scalar, id, theta, g0.segment(ii, 1), k_max, mode_tol);
    });

    PerModeResult out;
    const int nodes = problem.grid.nt + 1;
    Eigen::MatrixXd zy(n, nodes), zl(n, nodes);
    int longest = 0;
    bool all_converged = true, any_diverged = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        const DdResult& r = modes[static_cast<size_t>(i)];
        zy.row(i) = r.trajectory.y.row(0);
        zl.row(i) = r.trajectory.lambda.row(0);
        longest = std::max(longest, r.history.iterations());
        all_converged = all_converged && r.status == DdStatus::converged;
        any_diverged = any_diverged || r.status == DdStatus::diverged;
        out.mode_histories.push_back(r.history);
        out.mode_status.push_back(r.status);
    }
    out.trajectory.y = P * zy;
    out.trajectory.lambda = P * zl;
    out.status = any_diverged ? DdStatus::diverged : (all_converged ? DdStatus::converged : DdStatus::max_iterations);

    Eigen::VectorXd g = g0;
    out.history.interface_values.push_back(f0);
    for (int k = 1; k <= longest; ++k) {
        double sq = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const IterationHistory& h = out.mode_histories[static_cast<size_t>(i)];
            if (k <= h.iterations()) {
                sq += h.residual_norms[k - 1] * h.residual_norms[k - 1];
                g[i] = h.interface_values[k][0];
            }
        }
        out.history.residual_norms.push_back(std::sqrt(sq));
        out.history.interface_values.push_back(P * g);
    }
    if (out.history.iterations() >= 4) {
        try {
            out.history.observed_rate = observed_rate(out.history);
        } catch (const Error&) {
            out.history.observed_rate.reset();
        }
    }
    return out;
}

}  // namespace tdd
