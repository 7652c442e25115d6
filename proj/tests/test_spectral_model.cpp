#include "tdd/hyperbolic.hpp"
#include "tdd/spectral_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace tdd;

namespace {

template <class Fn>
ErrorKind error_kind(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an exception";
    return ErrorKind::usage;
}

}  // namespace

TEST(ProblemParams, DefaultsAreValid) { EXPECT_NO_THROW(ProblemParams{}.validate()); }

TEST(ProblemParams, RejectsNonPositiveNu) {
    ProblemParams p;
    p.nu = 0.0;
    EXPECT_EQ(error_kind([&] { p.validate(); }), ErrorKind::invalid_parameter);
}

TEST(ProblemParams, RejectsNegativeGamma) {
    ProblemParams p;
    p.gamma = -1.0;
    EXPECT_EQ(error_kind([&] { p.validate(); }), ErrorKind::invalid_parameter);
}

TEST(ProblemParams, RejectsAlphaAtEndpoints) {
    for (double a : {0.0, 1.0, 1e-10, 1.0 - 1e-10, 1.5}) {
        ProblemParams p;
        p.alpha = a;
        EXPECT_EQ(error_kind([&] { p.validate(); }), ErrorKind::invalid_parameter) << a;
    }
}

TEST(ProblemParams, AlphaMarginIsConfigurable) {
    ProblemParams p;
    p.alpha = 1e-3;
    p.alpha_margin = 1e-2;
    EXPECT_THROW(p.validate(), Error);
    p.alpha_margin = 1e-4;
    EXPECT_NO_THROW(p.validate());
}

TEST(ProblemParams, RejectsThetaOutsideOpenInterval) {
    for (double t : {0.0, -0.5, 2.0}) {
        ProblemParams p;
        p.theta = t;
        EXPECT_THROW(p.validate(), Error) << t;
    }
}

TEST(BuildLaplacian, RejectsSingleNode) {
    EXPECT_EQ(error_kind([] { build_laplacian_1d(1); }), ErrorKind::invalid_dimension);
}

TEST(BuildLaplacian, ThreeNodeEigenvalues) {
    const SpectralModel m = build_laplacian_1d(3, 1.0);
    const double h = 0.25;
    const double pi = std::numbers::pi;
    const double expected[] = {4 / (h * h) * std::pow(std::sin(pi / 8), 2), 4 / (h * h) * std::pow(std::sin(pi / 4), 2),
                               4 / (h * h) * std::pow(std::sin(3 * pi / 8), 2)};
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(m.eigenvalues()[k], expected[k], 1e-12 * expected[k]);
    EXPECT_DOUBLE_EQ(*m.mesh_width(), h);
}

TEST(BuildLaplacian, TwoNodeStencil) {
    const SpectralModel m = build_laplacian_1d(2, 1.0);
    EXPECT_DOUBLE_EQ(m.matrix()(0, 0), 18.0);
    EXPECT_DOUBLE_EQ(m.matrix()(0, 1), -9.0);
    EXPECT_DOUBLE_EQ(m.matrix()(1, 0), -9.0);
    EXPECT_DOUBLE_EQ(m.matrix()(1, 1), 18.0);
}

TEST(BuildLaplacian, EightNodesMatchDenseEigensolver) {
    const SpectralModel m = build_laplacian_1d(8, 1.0);
    const Eigendecomposition eig = eigendecompose(m.matrix());
    for (int k = 0; k < 8; ++k) EXPECT_NEAR(eig.eigenvalues[k], m.eigenvalues()[k], 1e-10);
    EXPECT_LT(m.reconstruction_error(), 1e-10);
    const Eigen::MatrixXd PtP = m.eigenvectors().transpose() * m.eigenvectors();
    EXPECT_LT((PtP - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildLaplacian, RejectsBadLength) { EXPECT_THROW(build_laplacian_1d(4, 0.0), Error); }

TEST(Eigendecompose, IdentityHasUnitEigenvalues) {
    const Eigendecomposition eig = eigendecompose(Eigen::MatrixXd::Identity(2, 2));
    EXPECT_DOUBLE_EQ(eig.eigenvalues[0], 1.0);
    EXPECT_DOUBLE_EQ(eig.eigenvalues[1], 1.0);
    const Eigen::MatrixXd PtP = eig.eigenvectors.transpose() * eig.eigenvectors;
    EXPECT_LT((PtP - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Eigendecompose, TwoByTwoChain) {
    Eigen::MatrixXd A(2, 2);
    A << 2, -1, -1, 2;
    const Eigendecomposition eig = eigendecompose(A);
    EXPECT_NEAR(eig.eigenvalues[0], 1.0, 1e-14);
    EXPECT_NEAR(eig.eigenvalues[1], 3.0, 1e-14);
}

TEST(Eigendecompose, RejectsAsymmetricMatrix) {
    Eigen::MatrixXd A(2, 2);
    A << 2, -1, 0, 2;
    EXPECT_EQ(error_kind([&] { eigendecompose(A); }), ErrorKind::symmetry_violation);
}

TEST(SpectralModel, SnapsRoundingNegativeEigenvalueToZero) {
    Eigen::MatrixXd A(2, 2);
    A << 1, 1, 1, 1 + 1e-15;
    const SpectralModel m = SpectralModel::from_matrix(A);
    EXPECT_GE(m.d_min(), 0.0);
    EXPECT_NEAR(m.d_max(), 2.0, 1e-12);
}

TEST(SpectralModel, FromEigenvaluesSortsAscending) {
    Eigen::VectorXd v(3);
    v << 5.0, 0.5, 2.0;
    const SpectralModel m = SpectralModel::from_eigenvalues(v);
    EXPECT_DOUBLE_EQ(m.d_min(), 0.5);
    EXPECT_DOUBLE_EQ(m.eigenvalues()[1], 2.0);
    EXPECT_DOUBLE_EQ(m.d_max(), 5.0);
    EXPECT_DOUBLE_EQ(m.matrix()(2, 2), 5.0);
}

TEST(ReadMatrix, ParsesSquareMatrix) {
    std::istringstream in("2\n2 -1\n-1 2\n");
    const Eigen::MatrixXd A = read_matrix(in, "inline");
    EXPECT_DOUBLE_EQ(A(0, 1), -1.0);
    EXPECT_DOUBLE_EQ(A(1, 1), 2.0);
}

TEST(ReadMatrix, TruncatedInputNamesOrigin) {
    std::istringstream in("3\n1 2 3\n4 5\n");
    try {
        read_matrix(in, "broken.txt");
        FAIL() << "expected an io error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::io);
        EXPECT_NE(std::string(e.what()).find("broken.txt"), std::string::npos);
    }
}

TEST(ReadMatrix, TrailingContentIsRejected) {
    std::istringstream in("1\n4\n5\n");
    EXPECT_EQ(error_kind([&] { read_matrix(in, "x"); }), ErrorKind::io);
}

TEST(ReadMatrix, MissingFileIsIoError) {
    EXPECT_EQ(error_kind([] { read_matrix_file("/nonexistent/matrix.txt"); }), ErrorKind::io);
}

TEST(ModalCoefficients, ZeroEigenvalue) {
    ProblemParams p;
    p.nu = 0.1;
    p.gamma = 2.0;
    const auto m = modal_coefficients(0.0, p);
    EXPECT_NEAR(m.sigma, std::sqrt(10.0), 1e-14);
    EXPECT_NEAR(m.omega, 20.0, 1e-13);
    EXPECT_DOUBLE_EQ(m.beta, 1.0);
}

TEST(ModalCoefficients, UnitEigenvalue) {
    ProblemParams p;
    p.nu = 1.0;
    p.gamma = 0.0;
    const auto m = modal_coefficients(1.0, p);
    EXPECT_NEAR(m.sigma, std::sqrt(2.0), 1e-15);
    EXPECT_DOUBLE_EQ(m.omega, 1.0);
    EXPECT_DOUBLE_EQ(m.beta, 1.0);
}

TEST(ModalCoefficients, TargetWeightedCase) {
    ProblemParams p;
    p.nu = 0.1;
    p.gamma = 10.0;
    p.alpha = 0.5;
    const auto m = modal_coefficients(3.0, p);
    EXPECT_NEAR(m.sigma, std::sqrt(19.0), 1e-14);
    EXPECT_NEAR(m.omega, 103.0, 1e-12);
    EXPECT_DOUBLE_EQ(m.beta, -29.0);
    EXPECT_NEAR(m.a, std::sqrt(19.0) / 2, 1e-14);
    EXPECT_NEAR(m.b, std::sqrt(19.0) / 2, 1e-14);
}

TEST(ModalCoefficients, SigmaMinusDIsAccurateForLargeD) {
    ProblemParams p;
    p.nu = 1.0;
    const auto m = modal_coefficients(1e8, p);
    const double exact = 1.0 / (std::sqrt(1e16 + 1.0) + 1e8);
    EXPECT_NEAR(m.sigma_minus_d(), exact, 1e-15 * exact);
}

TEST(ModalGeneralSolution, CoshAtZero) {
    const auto f = modal_general_solution(1.0, 0.0, 3.0);
    EXPECT_DOUBLE_EQ(f.value(0.0), 1.0);
    EXPECT_DOUBLE_EQ(f.derivative(0.0), 0.0);
}

TEST(ModalGeneralSolution, SinhAtZero) {
    const auto f = modal_general_solution(0.0, 1.0, 3.0);
    EXPECT_DOUBLE_EQ(f.value(0.0), 0.0);
    EXPECT_DOUBLE_EQ(f.derivative(0.0), 3.0);
}

TEST(ModalGeneralSolution, CoshPlusSinhIsExponential) {
    const auto f = modal_general_solution(1.0, 1.0, 2.0);
    EXPECT_NEAR(f.value(1.0), std::exp(2.0), 1e-14 * std::exp(2.0));
}

TEST(ModalGeneralSolution, LargeArgumentStaysFinite) {
    const auto f = modal_general_solution(1.0, -1.0, 700.0);
    EXPECT_NEAR(f.value(1.0), std::exp(-700.0), 1e-12 * std::exp(-700.0));
    EXPECT_TRUE(std::isfinite(modal_general_solution(1.0, 1.0, 709.0).value(1.0)));
}

TEST(ModalGeneralSolution, RejectsNonPositiveSigma) { EXPECT_THROW(modal_general_solution(1.0, 0.0, 0.0), Error); }

TEST(ModalBvpSolution, BasisIsBoundedAndSatisfiesOde) {
    ModalBvpSolution<double> s;
    s.sigma = 50.0;
    s.t0 = 0.2;
    s.t1 = 0.9;
    s.p = 2.0;
    s.q = -1.0;
    EXPECT_NEAR(s.value(0.2), 2.0 - std::exp(-35.0), 1e-15);
    EXPECT_NEAR(s.value(0.9), -1.0 + 2.0 * std::exp(-35.0), 1e-15);
    const double t = 0.5, h = 1e-5;
    const double second = (s.value(t + h) - 2 * s.value(t) + s.value(t - h)) / (h * h);
    EXPECT_NEAR(second, s.second_derivative(t), 1e-4 * std::abs(s.second_derivative(t)) + 1e-6);
}
