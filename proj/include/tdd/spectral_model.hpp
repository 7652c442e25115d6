#pragma once

#include "tdd/errors.hpp"
#include "tdd/hyperbolic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

namespace tdd {

/// Scalar data of the control problem shared by every formula.
///
/// nu weights the control cost, gamma the final-time target, T is the
/// horizon, alpha the interface between the two time subdomains and theta
/// the relaxation parameter of the interface update.
struct ProblemParams {
    double nu = 0.1;
    double gamma = 0.0;
    double T = 1.0;
    double alpha = 0.5;
    double theta = 1.0;
    /// alpha must stay at least alpha_margin * T away from 0 and T.
    double alpha_margin = 1e-8;

    double inv_nu() const { return 1.0 / nu; }

    /// Relaxation outside (0, 1] is accepted but unusual.
    bool theta_in_canonical_range() const { return theta > 0.0 && theta <= 1.0; }

    ProblemParams with_theta(double value) const {
        ProblemParams p = *this;
        p.theta = value;
        return p;
    }

    ProblemParams with_alpha(double value) const {
        ProblemParams p = *this;
        p.alpha = value;
        return p;
    }

    void validate() const {
        auto fail = [](const std::string& what) { throw Error(ErrorKind::invalid_parameter, what); };
        if (!(std::isfinite(nu) && nu > 0.0)) fail("nu must be finite and > 0");
        if (!(std::isfinite(gamma) && gamma >= 0.0)) fail("gamma must be finite and >= 0");
        if (!(std::isfinite(T) && T > 0.0)) fail("T must be finite and > 0");
        if (!(std::isfinite(alpha_margin) && alpha_margin > 0.0 && alpha_margin < 0.5)) {
            fail("alpha_margin must lie in (0, 0.5)");
        }
        const double eps = alpha_margin * T;
        if (!(std::isfinite(alpha) && alpha >= eps && alpha <= T - eps)) {
            fail("alpha must lie in (0, T) at least alpha_margin*T from the ends");
        }
        if (!(std::isfinite(theta) && theta > 0.0 && theta < 2.0)) fail("theta must lie in (0, 2)");
    }
};

/// Per-eigenvalue coefficients: sigma = sqrt(d^2 + 1/nu), omega = gamma/nu + d,
/// beta = 1 - gamma*d, and the interface arguments a = sigma*alpha,
/// b = sigma*(T - alpha).
template <class Real = double>
struct ModalTriple {
    Real d{};
    Real sigma{};
    Real omega{};
    Real beta{};
    Real a{};
    Real b{};
    Real inv_nu{};
    Real gamma{};

    /// sigma - d computed as (1/nu)/(sigma + d), free of cancellation.
    Real sigma_minus_d() const { return inv_nu / (sigma + d); }
};

template <class Real = double>
ModalTriple<Real> modal_coefficients(Real d, const ProblemParams& params) {
    params.validate();
    if (!(d >= Real(0)) || !std::isfinite(static_cast<double>(d))) {
        throw Error(ErrorKind::unsupported_spectrum,
                    "eigenvalue " + std::to_string(static_cast<double>(d)) + " is negative or not finite");
    }
    ModalTriple<Real> m;
    m.d = d;
    m.inv_nu = Real(1) / Real(params.nu);
    m.gamma = Real(params.gamma);
    m.sigma = std::hypot(d, std::sqrt(m.inv_nu));
    m.omega = m.gamma * m.inv_nu + d;
    m.beta = Real(1) - m.gamma * d;
    m.a = m.sigma * Real(params.alpha);
    m.b = m.sigma * (Real(params.T) - Real(params.alpha));
    return m;
}

struct Eigendecomposition {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXd eigenvectors;  // orthogonal, columns match eigenvalues
};

namespace detail {

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline void require_symmetric(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols() || A.rows() == 0) {
        throw Error(ErrorKind::invalid_dimension, "matrix must be square and non-empty");
    }
    if (!A.allFinite()) throw Error(ErrorKind::invalid_input, "matrix has non-finite entries");
    const double scale = max_abs(A);
    const double skew = max_abs(A - A.transpose());
    if (skew > 1e-12 * scale) {
        std::ostringstream os;
        os << "max |A - A^T| = " << skew << " exceeds 1e-12 * max|A| = " << 1e-12 * scale;
        throw Error(ErrorKind::symmetry_violation, os.str());
    }
}

}  // namespace detail

inline Eigendecomposition eigendecompose(const Eigen::MatrixXd& A) {
    detail::require_symmetric(A);
    const Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::invalid_input, "symmetric eigensolver did not converge");
    }
    // Eigen already sorts ascending.
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Spatial operator A together with its eigendecomposition A = P diag(d) P^T.
class SpectralModel {
public:
    /// Eigendecomposes a user matrix. Eigenvalues in [-1e-12*max|A|, 0) are
    /// rounding noise of a semi-definite matrix and are snapped to zero.
    static SpectralModel from_matrix(Eigen::MatrixXd A) {
        Eigendecomposition eig = eigendecompose(A);
        const double noise = 1e-12 * detail::max_abs(A);
        for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
            if (eig.eigenvalues[i] < 0.0 && eig.eigenvalues[i] >= -noise) eig.eigenvalues[i] = 0.0;
        }
        return SpectralModel(std::move(A), std::move(eig.eigenvalues), std::move(eig.eigenvectors), std::nullopt);
    }

    /// A diagonal operator with the given (non-negative) eigenvalues.
    static SpectralModel from_eigenvalues(const Eigen::VectorXd& values) {
        if (values.size() == 0) throw Error(ErrorKind::invalid_dimension, "empty eigenvalue list");
        Eigen::VectorXd sorted = values;
        std::sort(sorted.begin(), sorted.end());
        Eigen::MatrixXd A = sorted.asDiagonal();
        Eigen::MatrixXd P = Eigen::MatrixXd::Identity(sorted.size(), sorted.size());
        return SpectralModel(std::move(A), std::move(sorted), std::move(P), std::nullopt);
    }

    SpectralModel(Eigen::MatrixXd A, Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors,
                  std::optional<double> mesh_width)
        : A_(std::move(A))
        , eigenvalues_(std::move(eigenvalues))
        , P_(std::move(eigenvectors))
        , h_(mesh_width) {}

    const Eigen::MatrixXd& matrix() const { return A_; }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    const Eigen::MatrixXd& eigenvectors() const { return P_; }
    Eigen::Index size() const { return A_.rows(); }
    std::optional<double> mesh_width() const { return h_; }
    double d_min() const { return eigenvalues_[0]; }
    double d_max() const { return eigenvalues_[eigenvalues_.size() - 1]; }

    /// max |A - P diag(d) P^T|
    double reconstruction_error() const {
        return detail::max_abs(A_ - P_ * eigenvalues_.asDiagonal() * P_.transpose());
    }

private:
    Eigen::MatrixXd A_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd P_;
    std::optional<double> h_;
};

/// Closed-form eigenvalues of the 3-point Dirichlet Laplacian on (0, length)
/// with n interior nodes, ascending: (4/h^2) sin^2(k pi h / (2 length)).
inline Eigen::VectorXd laplacian_1d_eigenvalues(int n, double length) {
    const double h = length / (n + 1);
    Eigen::VectorXd d(n);
    for (int k = 1; k <= n; ++k) {
        const double s = std::sin(k * std::numbers::pi * h / (2.0 * length));
        d[k - 1] = 4.0 / (h * h) * s * s;
    }
    return d;
}

inline SpectralModel build_laplacian_1d(int n, double length = 1.0) {
    if (n < 2) throw Error(ErrorKind::invalid_dimension, "Laplacian needs n >= 2, got " + std::to_string(n));
    if (!(std::isfinite(length) && length > 0.0)) {
        throw Error(ErrorKind::invalid_parameter, "Laplacian length must be > 0");
    }
    const double h = length / (n + 1);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = 2.0 / (h * h);
        if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = -1.0 / (h * h);
    }
    Eigen::MatrixXd P(n, n);
    const double norm = std::sqrt(2.0 / (n + 1));
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            P(j, k) = norm * std::sin((j + 1) * (k + 1) * std::numbers::pi / (n + 1));
        }
    }
    return SpectralModel(std::move(A), laplacian_1d_eigenvalues(n, length), std::move(P), h);
}

/// Plain-text matrix: first line n, then n rows of n whitespace-separated reals.
inline Eigen::MatrixXd read_matrix(std::istream& in, const std::string& origin) {
    long n = 0;
    if (!(in >> n) || n <= 0) throw Error(ErrorKind::io, origin + ": missing or invalid dimension line");
    Eigen::MatrixXd A(n, n);
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < n; ++j) {
            if (!(in >> A(i, j))) {
                throw Error(ErrorKind::io, origin + ": expected " + std::to_string(n * n) + " entries, entry (" +
                                               std::to_string(i) + "," + std::to_string(j) + ") unreadable");
            }
        }
    }
    std::string trailing;
    if (in >> trailing) throw Error(ErrorKind::io, origin + ": trailing content '" + trailing + "'");
    return A;
}

inline SpectralModel read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open matrix file " + path.string());
    return SpectralModel::from_matrix(read_matrix(in, path.string()));
}

enum class ModalState { z, mu };

/// Solution of a modal two-point problem u'' = sigma^2 u on [t0, t1], kept in
/// the local exponential basis u = p e^{-sigma (t - t0)} + q e^{sigma (t - t1)}.
/// Both basis functions are bounded by 1 on the window, so no coefficient
/// overflows however large sigma*(t1 - t0) is.
template <class Real = double>
struct ModalBvpSolution {
    Real sigma{};
    Real t0{};
    Real t1{};
    Real p{};
    Real q{};
    ModalState state = ModalState::z;
    int side = 1;

    Real value(Real t) const { return p * std::exp(-sigma * (t - t0)) + q * std::exp(sigma * (t - t1)); }

    Real derivative(Real t) const {
        return sigma * (-p * std::exp(-sigma * (t - t0)) + q * std::exp(sigma * (t - t1)));
    }

    Real second_derivative(Real t) const { return sigma * sigma * value(t); }

    /// Coefficients (A, B) of A cosh(sigma t) + B sinh(sigma t) in log form.
    std::pair<SignedLog<Real>, SignedLog<Real>> general_coefficients() const {
        SignedLog<Real> grow = SignedLog<Real>::from_value(q);
        if (grow.sign != 0) grow.log_magnitude -= sigma * t1;
        SignedLog<Real> decay = SignedLog<Real>::from_value(p);
        if (decay.sign != 0) decay.log_magnitude += sigma * t0;
        return {grow + decay, grow + (-decay)};
    }
};

}  // namespace tdd
