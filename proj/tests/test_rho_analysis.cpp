#include "tdd/convergence_report.hpp"
#include "tdd/modal_dd.hpp"
#include "tdd/rho_analysis.hpp"
#include "tdd/theta_search.hpp"

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

std::vector<double> log_points(double lo, double hi, int count) {
    std::vector<double> d;
    for (int i = 0; i < count; ++i) d.push_back(std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * i / (count - 1)));
    return d;
}

double coth(double x) { return 1.0 / std::tanh(x); }

}  // namespace

TEST(AlgorithmNames, RoundTrip) {
    for (AlgorithmId id : kAllAlgorithms) EXPECT_EQ(parse_algorithm(name(id)), id);
    EXPECT_EQ(parse_algorithm("dn2"), AlgorithmId::DN2);
    EXPECT_THROW(parse_algorithm("DN4"), Error);
}

TEST(RhoDn1, ZeroEigenvalueGivesOneForAnyThetaAndAlpha) {
    for (double theta : {0.3, 0.7, 1.0}) {
        for (double alpha : {0.2, 0.5, 0.8}) EXPECT_DOUBLE_EQ(rho_dn1(0.0, params(0.1, 0.0, alpha, theta)), 1.0);
    }
}

TEST(RhoDn1, LargeEigenvalueVanishesAtThetaOne) { EXPECT_LE(rho_dn1(1e8, params(0.1, 0.0, 0.5)), 1e-6); }

TEST(RhoDn1, UnitEigenvalueContractsAndMatchesModalRatio) {
    const ProblemParams p = params(0.1, 0.0, 0.5);
    const double r = rho_dn1(1.0, p);
    EXPECT_GT(r, 0.0);
    EXPECT_LT(r, 1.0);
    EXPECT_NEAR(iteration_ratio(AlgorithmId::DN1, 1.0, p), r, 1e-10 * r);
}

TEST(RhoNd1, ZeroEigenvalueGivesOne) {
    for (double theta : {0.4, 1.0}) EXPECT_DOUBLE_EQ(rho_nd1(0.0, params(0.1, 1.0, 0.3, theta)), 1.0);
}

TEST(RhoNd1, CoincidesWithDn1ForSymmetricSplitWithoutTarget) {
    for (double theta : {0.5, 0.9, 1.0}) {
        const ProblemParams p = params(0.1, 0.0, 0.5, theta);
        for (double d : log_points(1e-3, 1e3, 61)) EXPECT_NEAR(rho_nd1(d, p), rho_dn1(d, p), 1e-12) << d;
    }
}

TEST(RhoNd1, AsymmetricMatchesModalRatio) {
    const ProblemParams p = params(0.1, 0.0, 0.3);
    const double r = rho_nd1(1.0, p);
    EXPECT_NEAR(iteration_ratio(AlgorithmId::ND1, 1.0, p), r, 1e-10 * r);
}

TEST(RhoDn2, SmallEigenvalueValues) {
    EXPECT_NEAR(rho_dn2(0.0, params(0.1, 0.0, 0.5)), 1.185, 5e-4);
    EXPECT_NEAR(rho_dn2(0.0, params(0.1, 10.0, 0.5)), 1.005, 5e-4);
}

TEST(RhoDn2, LargeEigenvalueLimitAtHalfRelaxation) {
    EXPECT_NEAR(rho_dn2(1e8, params(0.1, 0.0, 0.5, 0.5)), 0.0, 1e-6);
}

TEST(RhoNd2, SmallEigenvalueValues) {
    EXPECT_NEAR(rho_nd2(0.0, params(0.1, 0.0, 0.5)), 0.844, 5e-4);
    EXPECT_NEAR(rho_nd2(0.0, params(0.1, 0.0, 0.3)), 0.722, 5e-4);
}

TEST(RhoNd2, ContractsForEarlyInterface) {
    for (double alpha : {0.1, 0.3, 0.5}) {
        const ProblemParams p = params(0.1, 0.0, alpha);
        for (double d : log_points(1e-2, 1e2, 81)) {
            EXPECT_LE(rho_nd2(d, p), 1.0) << d;
            EXPECT_LT(unrelaxed_excess_log(AlgorithmId::ND2, d, p).sign, 0) << d;
        }
    }
}

TEST(RhoDn3, LateInterfaceWithTargetValue) { EXPECT_NEAR(rho_dn3(0.0, params(0.1, 10.0, 0.7)), 1.296, 5e-4); }

TEST(RhoDn3, LargeEigenvalueLimitAtThetaOne) { EXPECT_NEAR(rho_dn3(1e8, params(0.1, 0.0, 0.5)), 1.0, 1e-6); }

TEST(RhoNd3, DivergesEverywhereWithoutTarget) {
    for (double alpha : {0.2, 0.5, 0.8}) {
        const ProblemParams p = params(0.1, 0.0, alpha);
        for (double d : log_points(1e-2, 1e2, 41)) {
            EXPECT_GE(rho_nd3(d, p), 1.0) << d;
            EXPECT_GT(unrelaxed_excess_log(AlgorithmId::ND3, d, p).sign, 0) << d;
        }
        EXPECT_GT(rho_nd3(1.0, p), 1.0);
    }
}

TEST(RhoNd3, EarlyInterfaceValue) { EXPECT_NEAR(rho_nd3(0.0, params(0.1, 0.0, 0.3)), 1.386, 5e-4); }

TEST(RhoAtZero, Values) {
    EXPECT_DOUBLE_EQ(rho_at_zero(AlgorithmId::DN1, params(0.3, 2.0, 0.4, 0.6)), 1.0);
    EXPECT_NEAR(rho_at_zero(AlgorithmId::DN2, params(0.1, 10.0, 0.7)), 0.771, 5e-4);
    EXPECT_NEAR(rho_at_zero(AlgorithmId::ND2, params(0.1, 10.0, 0.5)), 0.995, 5e-4);
}

TEST(RhoAtZero, AgreesWithClosedFormAtZero) {
    for (AlgorithmId id : kAllAlgorithms) {
        const ProblemParams p = params(0.1, 1.0, 0.4, 0.8);
        EXPECT_NEAR(rho_at_zero(id, p), rho(id, 0.0, p), 1e-12) << name(id);
    }
}

TEST(RhoAtInfinity, Values) {
    EXPECT_DOUBLE_EQ(rho_at_infinity(AlgorithmId::DN1, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(rho_at_infinity(AlgorithmId::DN2, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(rho_at_infinity(AlgorithmId::ND3, 1.0), 1.0);
}

TEST(BoundDn1, Values) {
    EXPECT_NEAR(bound_dn1(params(1.0, 0.0, 0.5), 2.0), 0.25, 1e-15);
    EXPECT_NEAR(bound_dn1(params(0.1, 0.0, 0.5), 1.0), 10.0, 1e-12);
    EXPECT_THROW(bound_dn1(params(1.0, 0.0, 0.5), 0.0), Error);
}

TEST(BoundDn1, DominatesEverySpectrumValue) {
    const ProblemParams p = params(1.0, 0.0, 0.5);
    const std::vector<double> d = {0.5, 2.0, 7.0, 40.0};
    for (double x : d) EXPECT_LE(rho_dn1(x, p), bound_dn1(p, 0.5));
}

TEST(BoundNd1, Values) {
    EXPECT_NEAR(bound_nd1(params(1.0, 0.0, 1e-8 * 2), 0.0), coth(1.0 - 2e-8), 1e-12);
    try {
        bound_nd1(params(1.0, 1.0, 0.5), 1.0);
        FAIL() << "expected bound-not-applicable";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::bound_not_applicable);
    }
}

TEST(BoundNd1, DominatesLaplacianSpectrum) {
    const SpectralModel m = build_laplacian_1d(16);
    const std::vector<double> d(m.eigenvalues().begin(), m.eigenvalues().end());
    for (double nu : {0.01, 0.1, 1.0}) {
        const ProblemParams p = params(nu, 0.0, 0.4);
        const ConvergenceReport r = spectral_report(AlgorithmId::ND1, p, d);
        ASSERT_TRUE(r.bound.has_value());
        EXPECT_LE(r.spectral_max, *r.bound * (1 + 1e-15));
    }
}

TEST(ThetaStarClosedForm, SymmetricValues) {
    const ProblemParams p = params(0.1, 0.0, 0.5);
    const double h = std::sqrt(10.0) / 2;
    const ThetaStar dn2 = theta_star_closed_form(AlgorithmId::DN2, p);
    EXPECT_NEAR(dn2.value, 2.0 / (3.0 + coth(h) * coth(h)), 1e-12);
    EXPECT_NEAR(dn2.value, 0.4779, 1e-4);
    EXPECT_LT(dn2.value, 0.5);
    EXPECT_TRUE(dn2.proven);
    const ThetaStar nd2 = theta_star_closed_form(AlgorithmId::ND2, p);
    EXPECT_NEAR(nd2.value, 2.0 / (3.0 + std::tanh(h) * std::tanh(h)), 1e-12);
    EXPECT_GT(nd2.value, 0.5);
    EXPECT_LT(nd2.value, 2.0 / 3.0);
}

TEST(ThetaStarClosedForm, CategoryThreeSharesCategoryTwoValues) {
    for (double alpha : {0.2, 0.5, 0.7}) {
        const ProblemParams p = params(0.1, 0.0, alpha);
        EXPECT_EQ(theta_star_closed_form(AlgorithmId::ND3, p).value, theta_star_closed_form(AlgorithmId::DN2, p).value);
        EXPECT_EQ(theta_star_closed_form(AlgorithmId::DN3, p).value, theta_star_closed_form(AlgorithmId::ND2, p).value);
    }
}

TEST(ThetaStarClosedForm, HeuristicWithTarget) {
    EXPECT_FALSE(theta_star_closed_form(AlgorithmId::DN2, params(0.1, 10.0, 0.5)).proven);
}

TEST(ThetaStarClosedForm, CategoryOneNotApplicable) {
    try {
        theta_star_closed_form(AlgorithmId::DN1, params(0.1, 0.0, 0.5));
        FAIL() << "expected not-applicable";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::not_applicable);
    }
}

TEST(ThetaStarNumeric, MatchesClosedFormOnDenseGrid) {
    const ProblemParams p = params(0.1, 0.0, 0.5);
    const std::vector<double> d = log_points(1e-2, 1e2, 400);
    const ThetaSearchResult r = theta_star_numeric(AlgorithmId::DN2, p, d);
    EXPECT_NEAR(r.theta, theta_star_closed_form(AlgorithmId::DN2, p).value, 1e-3);
    EXPECT_GT(r.rho, 0.0);
    EXPECT_LT(r.rho, 1.0);
}

TEST(ThetaStarNumeric, CategoryOnePrefersThetaOne) {
    const std::vector<double> d = log_points(1e-2, 1e2, 400);
    EXPECT_NEAR(theta_star_numeric(AlgorithmId::DN1, params(0.1, 0.0, 0.5), d).theta, 1.0, 1e-3);
}

TEST(ThetaStarNumeric, Dn3WithTargetMovesAwayFromClosedForm) {
    const ProblemParams p = params(0.1, 10.0, 0.5);
    const std::vector<double> d = log_points(1e-2, 1e2, 400);
    const double numeric = theta_star_numeric(AlgorithmId::DN3, p, d).theta;
    EXPECT_GT(std::abs(numeric - theta_star_closed_form(AlgorithmId::DN3, p).value), 1e-3);
}

TEST(ThetaStarNumeric, IsDeterministic) {
    const ProblemParams p = params(0.3, 1.0, 0.6);
    const std::vector<double> d = log_points(1e-2, 1e2, 50);
    const auto a = theta_star_numeric(AlgorithmId::ND2, p, d);
    const auto b = theta_star_numeric(AlgorithmId::ND2, p, d);
    EXPECT_EQ(a.theta, b.theta);
    EXPECT_EQ(a.rho, b.rho);
}

TEST(ThetaStarNumeric, EmptyListIsRejected) {
    EXPECT_THROW(theta_star_numeric(AlgorithmId::DN2, params(0.1, 0.0, 0.5), std::vector<double>{}), Error);
}

TEST(RhoDn1ViaMu, MatchesDirectFormula) {
    EXPECT_NEAR(rho_dn1_via_mu(1.0, params(0.1, 0.0, 0.5)), rho_dn1(1.0, params(0.1, 0.0, 0.5)), 1e-12);
    EXPECT_DOUBLE_EQ(rho_dn1_via_mu(0.0, params(0.1, 0.0, 0.5)), 1.0);
    const ProblemParams p = params(0.1, 10.0, 0.7, 0.8);
    EXPECT_NEAR(rho_dn1_via_mu(50.0, p), rho_dn1(50.0, p), 1e-12);
}

TEST(SpectralReport, SinglePoint) {
    const ProblemParams p = params(0.1, 1.0, 0.4);
    const std::vector<double> d = {3.0};
    const ConvergenceReport r = spectral_report(AlgorithmId::ND2, p, d);
    EXPECT_EQ(r.spectral_max, rho_nd2(3.0, p));
    ASSERT_EQ(r.per_eigenvalue.size(), 1u);
    EXPECT_FALSE(r.bound.has_value());
}

TEST(SpectralReport, Dn1BoundOnLaplacian) {
    const SpectralModel m = build_laplacian_1d(16);
    const std::vector<double> d(m.eigenvalues().begin(), m.eigenvalues().end());
    const ConvergenceReport r = spectral_report(AlgorithmId::DN1, params(1.0, 0.0, 0.5), d);
    ASSERT_TRUE(r.bound.has_value());
    EXPECT_LE(r.spectral_max, *r.bound);
}

TEST(SpectralReport, Dn2DivergesWithSmallEigenvalues) {
    const std::vector<double> d = {1e-3, 1.0, 100.0};
    EXPECT_GT(spectral_report(AlgorithmId::DN2, params(0.1, 0.0, 0.4), d).spectral_max, 1.0);
}

TEST(UnrelaxedExcess, SignsFollowContractionProperties) {
    for (double d : log_points(1e-6, 1e8, 29)) {
        const ProblemParams p = params(1e-2, 0.0, 0.5);
        EXPECT_GT(unrelaxed_excess_log(AlgorithmId::DN2, d, p).sign, 0) << d;
        EXPECT_LT(unrelaxed_excess_log(AlgorithmId::ND2, d, p).sign, 0) << d;
        EXPECT_LT(unrelaxed_excess_log(AlgorithmId::DN3, d, p).sign, 0) << d;
        EXPECT_GT(unrelaxed_excess_log(AlgorithmId::ND3, d, p).sign, 0) << d;
    }
}
