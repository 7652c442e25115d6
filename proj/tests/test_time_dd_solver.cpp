#include "tdd/banded.hpp"
#include "tdd/convergence_report.hpp"
#include "tdd/modal_dd.hpp"
#include "tdd/rho_analysis.hpp"
#include "tdd/time_dd_solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace tdd;

namespace {

ProblemParams params(double nu, double gamma, double alpha, double theta = 1.0) {
    ProblemParams p;
    p.nu = nu;
    p.gamma = gamma;
    p.alpha = alpha;
    p.theta = theta;
    return p;
}

SpectralModel single_mode(double d) { return SpectralModel::from_eigenvalues(Eigen::VectorXd::Constant(1, d)); }

std::vector<double> eigenvalues(const SpectralModel& m) { return {m.eigenvalues().begin(), m.eigenvalues().end()}; }

/// Closed-form solution of z' = -d z + mu/nu, mu' = z + d mu with z(0) = 1,
/// mu(T) = 0 (gamma = 0, zero target).
struct ModalReference {
    double d, nu, T, sigma, c1, c2;

    ModalReference(double d_, double nu_, double T_) : d(d_), nu(nu_), T(T_), sigma(std::sqrt(d_ * d_ + 1 / nu_)) {
        // z = c1 cosh + c2 sinh with z(0) = 1 and z'(T) + d z(T) = 0.
        c1 = 1.0;
        c2 = -(sigma * std::sinh(sigma * T) + d * std::cosh(sigma * T)) /
             (sigma * std::cosh(sigma * T) + d * std::sinh(sigma * T));
    }
    double z(double t) const { return c1 * std::cosh(sigma * t) + c2 * std::sinh(sigma * t); }
    double mu(double t) const {
        const double dz = sigma * (c1 * std::sinh(sigma * t) + c2 * std::cosh(sigma * t));
        return nu * (dz + d * z(t));
    }
};

double monolithic_error(TimeScheme scheme, int nt) {
    ProblemParams p = params(1.0, 0.0, 0.5);
    DiscreteProblem problem = make_error_problem(single_mode(2.0), p, nt, scheme);
    problem.y0[0] = 1.0;
    const TrajectoryPair t = monolithic_solve(problem);
    const ModalReference ref(2.0, 1.0, 1.0);
    double worst = 0.0;
    for (int j = 0; j <= nt; ++j) {
        worst = std::max(worst, std::abs(t.y(0, j) - ref.z(problem.grid.time(j))));
        worst = std::max(worst, std::abs(t.lambda(0, j) - ref.mu(problem.grid.time(j))));
    }
    return worst;
}

}  // namespace

TEST(Banded, SolvesTridiagonalSystem) {
    BandedMatrix m(4, 1, 1);
    for (int i = 0; i < 4; ++i) {
        m.at(i, i) = 2.0;
        if (i > 0) m.at(i, i - 1) = -1.0;
        if (i < 3) m.at(i, i + 1) = -1.0;
    }
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    std::vector<double> b = m.multiply(x);
    BandedLU lu(m);
    lu.solve_in_place(b.data());
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(b[i], x[i], 1e-14);
}

TEST(Banded, OutOfBandAccessThrows) {
    BandedMatrix m(4, 1, 1);
    EXPECT_THROW(m.at(0, 2), Error);
}

TEST(Banded, SingularMatrixReportsPivot) {
    BandedMatrix m(3, 1, 1);
    m.at(0, 0) = 1.0;
    m.at(2, 2) = 1.0;
    try {
        BandedLU lu(m);
        FAIL() << "expected a factorization error";
    } catch (const FactorizationError& e) {
        EXPECT_EQ(e.pivot(), 2);
    }
}

TEST(TimeGrid, SnapsInterfaceToNearestNode) {
    const TimeGrid g = make_time_grid(1.0, 10, 0.33);
    EXPECT_EQ(g.interface_index, 3);
    EXPECT_NEAR(g.alpha(), 0.3, 1e-15);
    EXPECT_TRUE(g.snapped());
    EXPECT_FALSE(make_time_grid(1.0, 10, 0.5).snapped());
}

TEST(TimeGrid, RejectsTooFewSteps) { EXPECT_THROW(make_time_grid(1.0, 1, 0.5), Error); }

TEST(Monolithic, ZeroDataGivesZeroSolution) {
    const DiscreteProblem problem = make_error_problem(build_laplacian_1d(4), params(0.1, 1.0, 0.5), 40);
    const TrajectoryPair t = monolithic_solve(problem);
    EXPECT_EQ(t.y.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(t.lambda.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Monolithic, TrapezoidalIsSecondOrder) {
    const double e1 = monolithic_error(TimeScheme::trapezoidal, 100);
    const double e2 = monolithic_error(TimeScheme::trapezoidal, 200);
    EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.1);
}

TEST(Monolithic, ImplicitEulerIsFirstOrder) {
    const double e1 = monolithic_error(TimeScheme::implicit_euler, 200);
    const double e2 = monolithic_error(TimeScheme::implicit_euler, 400);
    EXPECT_NEAR(std::log2(e1 / e2), 1.0, 0.1);
}

TEST(Monolithic, ResidualIsSmallForForcedProblem) {
    const DiscreteProblem problem = make_forced_problem(build_laplacian_1d(6), params(0.1, 1.0, 0.4), 100);
    EXPECT_LT(discrete_residual(problem, monolithic_solve(problem)), 1e-12);
}

TEST(SubdomainDiscrete, ZeroDataGivesZeroSolution) {
    const DiscreteProblem problem = make_error_problem(build_laplacian_1d(4), params(0.1, 0.0, 0.5), 50);
    for (AlgorithmId id : kAllAlgorithms) {
        for (int side : {1, 2}) {
            const TrajectoryPair t = subdomain_solve_discrete(problem, side, id, Eigen::VectorXd::Zero(4));
            EXPECT_EQ(t.y.cwiseAbs().maxCoeff(), 0.0);
            EXPECT_EQ(t.lambda.cwiseAbs().maxCoeff(), 0.0);
        }
    }
}

TEST(SubdomainDiscrete, Dn1FirstSideImposesDatum) {
    const DiscreteProblem problem = make_error_problem(build_laplacian_1d(4), params(0.1, 0.0, 0.5), 50);
    Eigen::VectorXd f(4);
    f << 1.0, -2.0, 0.5, 3.0;
    const TrajectoryPair t = subdomain_solve_discrete(problem, 1, AlgorithmId::DN1, f);
    const Eigen::VectorXd trace =
        interface_trace(problem, t, interface_quantity(AlgorithmId::DN1, 1), problem.grid.interface_index);
    EXPECT_LT((trace - f).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SubdomainDiscrete, TraceConvergesToModalSolutionAtSecondOrder) {
    const ProblemParams p = params(1.0, 1.0, 0.5);
    const double d = 3.0;
    for (AlgorithmId id : kAllAlgorithms) {
        const int first = transmission_plan(id).first_side;
        const auto modal = subdomain_solve<double>(id, first, d, p, 1.0);
        const InterfaceQuantity out = transmission_plan(id).second_quantity;
        const double exact = modal.quantity(out, p.alpha);
        std::vector<double> errors;
        for (int nt : {100, 200, 400}) {
            const DiscreteProblem problem = make_error_problem(single_mode(d), p, nt);
            const TrajectoryPair t = subdomain_solve_discrete(problem, first, id, Eigen::VectorXd::Ones(1));
            errors.push_back(std::abs(interface_trace(problem, t, out, problem.grid.interface_index)[0] - exact));
        }
        EXPECT_GE(std::log2(errors[0] / errors[1]), 1.9) << name(id);
        EXPECT_GE(std::log2(errors[1] / errors[2]), 1.9) << name(id);
    }
}

TEST(DdSolve, MonolithicTraceIsFixedPoint) {
    const DiscreteProblem problem = make_forced_problem(build_laplacian_1d(6), params(0.1, 1.0, 0.4), 100);
    const TrajectoryPair mono = monolithic_solve(problem);
    for (AlgorithmId id : kAllAlgorithms) {
        const DdResult r = dd_solve(problem, id, 1.0, monolithic_interface_datum(problem, id, mono), 5, 1e-9);
        EXPECT_EQ(r.history.iterations(), 1) << name(id);
        EXPECT_EQ(r.status, DdStatus::converged);
        EXPECT_LE(r.history.residual_norms.front(), 1e-9);
    }
}

TEST(DdSolve, Dn1RateOnLaplacianMatchesPrediction) {
    const ProblemParams p = params(0.1, 0.0, 0.5);
    const DiscreteProblem problem = make_error_problem(build_laplacian_1d(16), p, 1000);
    Eigen::VectorXd f0 = Eigen::VectorXd::LinSpaced(16, 1.0, -0.5);
    const DdResult r = dd_solve(problem, AlgorithmId::DN1, 1.0, f0, 40, 1e-13);
    ASSERT_TRUE(r.history.observed_rate.has_value());
    const double predicted = spectral_report(AlgorithmId::DN1, p, eigenvalues(problem.model)).spectral_max;
    EXPECT_NEAR(*r.history.observed_rate, predicted, 0.05 * predicted);
}

TEST(DdSolve, Dn2DivergenceIsDetected) {
    const DiscreteProblem problem = make_error_problem(single_mode(1e-2), params(0.1, 0.0, 0.5), 100);
    const DdResult r = dd_solve(problem, AlgorithmId::DN2, 1.0, Eigen::VectorXd::Ones(1), 500, 1e-10);
    EXPECT_EQ(r.status, DdStatus::diverged);
    EXPECT_GT(growth_rate(r.history), 1.0);
}

TEST(DdSolve, ConvergedRunGluesToMonolithic) {
    const ProblemParams p = params(0.1, 1.0, 0.4);
    const DiscreteProblem problem = make_forced_problem(build_laplacian_1d(8), p, 200);
    const TrajectoryPair mono = monolithic_solve(problem);
    const double tol = 1e-10;
    for (AlgorithmId id : {AlgorithmId::DN1, AlgorithmId::ND1}) {
        const DdResult r = dd_solve(problem, id, 1.0, Eigen::VectorXd::Zero(8), 200, tol);
        EXPECT_EQ(r.status, DdStatus::converged);
        EXPECT_LE(l2_distance(r.trajectory, mono, problem.grid.dt), 10 * tol) << name(id);
    }
}

TEST(DdSolve, RecordsErrorNormsAgainstReference) {
    const DiscreteProblem problem = make_forced_problem(build_laplacian_1d(4), params(0.1, 0.0, 0.5), 100);
    const TrajectoryPair mono = monolithic_solve(problem);
    DdOptions options;
    options.reference = &mono;
    const DdResult r = dd_solve(problem, AlgorithmId::DN1, 1.0, Eigen::VectorXd::Zero(4), 50, 1e-11, options);
    ASSERT_EQ(r.history.error_norms.size(), r.history.residual_norms.size());
    EXPECT_LT(r.history.error_norms.back(), r.history.error_norms.front());
}

TEST(DdSolve, RejectsBadArguments) {
    const DiscreteProblem problem = make_error_problem(build_laplacian_1d(4), params(0.1, 0.0, 0.5), 20);
    EXPECT_THROW(dd_solve(problem, AlgorithmId::DN1, 1.0, Eigen::VectorXd::Zero(3), 5, 1e-9), Error);
    EXPECT_THROW(dd_solve(problem, AlgorithmId::DN1, 1.0, Eigen::VectorXd::Zero(4), 0, 1e-9), Error);
    EXPECT_THROW(dd_solve(problem, AlgorithmId::DN1, 0.0, Eigen::VectorXd::Zero(4), 5, 1e-9), Error);
}

TEST(ObservedRate, GeometricResidualsGiveTheRatio) {
    IterationHistory h;
    for (int k = 1; k <= 12; ++k) h.residual_norms.push_back(std::pow(0.3, k));
    EXPECT_NEAR(observed_rate(h), 0.3, 1e-12);
}

TEST(ObservedRate, TooFewResidualsThrow) {
    IterationHistory h;
    h.residual_norms = {1.0, 0.5};
    try {
        observed_rate(h);
        FAIL() << "expected too-few-iterations";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::too_few_iterations);
    }
}

TEST(ObservedRate, SingleModeMatchesIterationRatio) {
    const ProblemParams p = params(0.1, 0.0, 0.5);
    const DiscreteProblem problem = make_error_problem(single_mode(4.0), p, 2000);
    const DdResult r = dd_solve(problem, AlgorithmId::ND2, 1.0, Eigen::VectorXd::Ones(1), 12, 1e-300);
    const double expected = iteration_ratio<double>(AlgorithmId::ND2, 4.0, p);
    EXPECT_NEAR(observed_rate(r.history), expected, 1e-6);
}

TEST(ObservedRate, MixedModesBoundedBySpectralMax) {
    const ProblemParams p = params(0.1, 1.0, 0.5);
    const DiscreteProblem problem = make_error_problem(build_laplacian_1d(8), p, 1000);
    const DdResult r = dd_solve(problem, AlgorithmId::ND1, 1.0, Eigen::VectorXd::Ones(8), 30, 1e-14);
    const double predicted = spectral_report(AlgorithmId::ND1, p, eigenvalues(problem.model)).spectral_max;
    EXPECT_LE(observed_rate(r.history), predicted * 1.02);
}

TEST(PerMode, SingleModeIsIdenticalToCoupled) {
    const DiscreteProblem problem = make_forced_problem(single_mode(3.0), params(0.1, 1.0, 0.4), 100);
    const DdResult a = dd_solve(problem, AlgorithmId::DN2, 0.5, Eigen::VectorXd::Zero(1), 60, 1e-12);
    const PerModeResult b = dd_solve_per_mode(problem, AlgorithmId::DN2, 0.5, Eigen::VectorXd::Zero(1), 60, 1e-12);
    EXPECT_EQ(a.history.iterations(), b.history.iterations());
    EXPECT_LT((a.trajectory.y - b.trajectory.y).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PerMode, LaplacianAgreesWithCoupled) {
    const DiscreteProblem problem = make_forced_problem(build_laplacian_1d(8), params(0.1, 0.0, 0.5), 200);
    const DdResult a = dd_solve(problem, AlgorithmId::DN1, 1.0, Eigen::VectorXd::Zero(8), 100, 1e-12);
    const PerModeResult b = dd_solve_per_mode(problem, AlgorithmId::DN1, 1.0, Eigen::VectorXd::Zero(8), 100, 1e-12, 2);
    EXPECT_LT((a.trajectory.y - b.trajectory.y).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((a.trajectory.lambda - b.trajectory.lambda).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(PerMode, ModeRatesMatchConvergenceFactors) {
    const ProblemParams p = params(0.1, 0.0, 0.5);
    const DiscreteProblem problem = make_error_problem(build_laplacian_1d(4), p, 1000);
    const PerModeResult r =
        dd_solve_per_mode(problem, AlgorithmId::DN1, 1.0, Eigen::Vector4d(1.0, 0.3, -0.7, 0.2), 12, 1e-300, 0);
    for (int i = 0; i < 4; ++i) {
        const double expected = rho_dn1(problem.model.eigenvalues()[i], p);
        const auto& h = r.mode_histories[i];
        const double rate = h.iterations() >= 4 ? observed_rate(h) : h.interface_values[1].norm() / h.interface_values[0].norm();
        EXPECT_NEAR(rate, expected, 0.05 * expected + 1e-12) << i;
    }
}
