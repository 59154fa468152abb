#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "extremal/regularity.hpp"

using namespace extremal;

TEST(Regularity, ExponentialThreshold) {
    EXPECT_NEAR(alpha_star(1.0, 1.0), 4.0, 1e-12);
    EXPECT_NEAR(nf_threshold(1.0, 1.0), 10.0, 1e-12);
    EXPECT_EQ(max_integer_dim_below(10.0), 9);
}

TEST(Regularity, PowerTwoThreshold) {
    // tau = 1/2: N = 2 + 4 (1 + sqrt(1/2)) / (1/2) = 2 + 4 (2 + sqrt 2).
    EXPECT_NEAR(nf_threshold(0.5, 0.5), 2.0 + 4.0 * (2.0 + std::sqrt(2.0)), 1e-9);
    EXPECT_NEAR(alpha_star(0.5, 0.5), (2.0 + 2.0 * std::sqrt(0.5)) / 1.5, 1e-12);
    EXPECT_EQ(max_integer_dim_below(nf_threshold(0.5, 0.5)), 15);
}

TEST(Regularity, AsymmetricWindow) {
    // (tau-, tau+) = (1/2, 1): P_f = 9/4 a^2 - 4a, alpha* = 16/9, N = 2 * 16/9 + 2.
    EXPECT_NEAR(alpha_star(0.5, 1.0), 16.0 / 9.0, 1e-13);
    EXPECT_NEAR(nf_threshold(0.5, 1.0), 50.0 / 9.0, 1e-12);
    const auto roots = pf_roots(0.5, 1.0);
    EXPECT_NEAR(roots.first, 0.0, 1e-15);
}

TEST(Regularity, RandomWindowsRootAndBounds) {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
        double a = 1e-3 + (2.0 - 2e-3) * u(rng);
        double b = 1e-3 + (2.0 - 2e-3) * u(rng);
        if (a > b) std::swap(a, b);
        const double al = alpha_star(a, b);
        EXPECT_LT(std::abs(pf_eval(al, a, b)), 1e-9 * (1.0 + al * al)) << a << " " << b;
        EXPECT_GT(al, 1.0);
        EXPECT_GT(nf_threshold(a, b), 4.0);
        // Both roots straddle 1 from P_f(1) < 0.
        EXPECT_LT(pf_roots(a, b).first, 1.0);
    }
}

TEST(Regularity, DiagonalMinimumAtOne) {
    double best = 1e300, at = 0.0;
    for (int k = 1; k < 2000; ++k) {
        const double t = 2.0 * k / 2000.0;
        const double n = nf_threshold(t, t);
        EXPECT_GE(n, 10.0 - 1e-12) << t;
        if (n < best) {
            best = n;
            at = t;
        }
    }
    EXPECT_NEAR(at, 1.0, 1e-3);
    EXPECT_NEAR(best, 10.0, 1e-12);
}

TEST(Regularity, DiagonalClosedFormBelowOne) {
    for (double t : {0.1, 0.3, 0.5, 0.9}) EXPECT_NEAR(nf_threshold(t, t), 2.0 + 4.0 * (1.0 + std::sqrt(t)) / t, 1e-10);
}

TEST(Regularity, SmallRootStableNearTauPlusOne) {
    const double tp = 1.0 - 1e-12;
    const auto r = pf_roots(0.5, tp);
    EXPECT_NEAR(pf_eval(r.first, 0.5, tp), 0.0, 1e-20);
    EXPECT_GT(r.first, 0.0);
}

TEST(Regularity, InadmissibleWindows) {
    EXPECT_FALSE(tau_admissible(0.0, 1.0));
    EXPECT_FALSE(tau_admissible(1.2, 1.0));
    EXPECT_FALSE(tau_admissible(0.5, 2.0));
    EXPECT_THROW(alpha_star(0.0, 1.0), DomainError);
    EXPECT_THROW(nf_threshold(1.0, 2.5), DomainError);
}

TEST(Regularity, ReportForPresets) {
    const auto e = regularity_report(Nonlinearity::exponential());
    EXPECT_TRUE(e.admissible);
    EXPECT_EQ(*e.max_integer_dim(), 9);
    EXPECT_EQ(e.tau_source, TauSource::closed_form);
    const auto p = regularity_report(Nonlinearity::power(2.0));
    EXPECT_NEAR(*p.n_threshold, 15.656854249492381, 1e-9);
}

TEST(Regularity, ReportFlagsInadmissibleCustom) {
    // Quadratic up to t = 1, then linear: tau = 0 on the tail, so tau- = 0.
    const auto f = Nonlinearity::custom(
        "kinked", [](double t) { return t < 1.0 ? 1.0 + t + 0.5 * t * t : 0.5 + 2.0 * t; },
        [](double t) { return t < 1.0 ? 1.0 + t : 2.0; }, [](double t) { return t < 1.0 ? 1.0 : 0.0; });
    const auto rep = regularity_report(f, 10.0, 64);
    EXPECT_FALSE(rep.admissible);
    EXPECT_FALSE(rep.n_threshold);
    EXPECT_FALSE(rep.max_integer_dim());
    ASSERT_EQ(rep.reasons.size(), 1u);
    EXPECT_EQ(rep.reasons.front(), "tau- must be positive");
}
