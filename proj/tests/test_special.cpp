#include <gtest/gtest.h>

#include <cstring>

#include <boost/math/special_functions/airy.hpp>

#include "fixtures.hpp"
#include "rfmap/special.hpp"

using namespace rfmap;
using namespace rfmap::special;

TEST(TransitionFunction, MatchesQuadratureOracle) {
    for (double X : {1e-3, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0}) {
        const cdouble f = transition_function(X);
        const cdouble o = fixtures::transition_oracle(X);
        EXPECT_LT(std::abs(f - o), 1e-6) << "X=" << X;
    }
}

TEST(TransitionFunction, LargeArgumentTendsToOne) {
    EXPECT_LT(std::abs(transition_function(10.0) - 1.0), 0.1);
    EXPECT_LT(std::abs(std::abs(transition_function(50.0)) - 1.0), 0.02);
}

TEST(TransitionFunction, SmallArgumentLimit) {
    EXPECT_LT(std::abs(transition_function(0.002)), 0.1);
    for (double X : {1e-6, 1e-5, 1e-4}) {
        const double ratio = std::abs(transition_function(X)) / std::sqrt(kPi * X);
        EXPECT_NEAR(ratio, 1.0, 0.02) << "X=" << X;
    }
    EXPECT_EQ(transition_function(0.0), cdouble(0.0, 0.0));
}

TEST(TransitionFunction, MagnitudeMonotone) {
    double prev = 0.0;
    for (double lx = -3.0; lx <= 1.0; lx += 0.01) {
        const double m = std::abs(transition_function(std::pow(10.0, lx)));
        EXPECT_GE(m, prev) << "X=" << std::pow(10.0, lx);
        prev = m;
    }
}

TEST(TransitionFunction, RejectsNegative) {
    EXPECT_THROW(transition_function(-1.0), std::domain_error);
    EXPECT_THROW(fresnel_tail(-0.5), std::domain_error);
}

TEST(TransitionFunction, Deterministic) {
    const cdouble a = transition_function(3.7), b = transition_function(3.7);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(Airy, MatchesBoostOnRealAxis) {
    for (double x = -8.0; x <= 8.0; x += 0.37) {
        EXPECT_NEAR(airy_ai(cdouble(x, 0.0)).real(), boost::math::airy_ai(x), 1e-9 * (1.0 + std::abs(x)));
        EXPECT_NEAR(airy_aip(cdouble(x, 0.0)).real(), boost::math::airy_ai_prime(x), 1e-8 * (1.0 + std::abs(x)));
    }
}

TEST(Airy, ZerosMatchBoost) {
    const auto a = airy_ai_zeros(20);
    const auto ap = airy_aip_zeros(20);
    ASSERT_EQ(a.size(), 20u);
    for (int i = 0; i < 20; ++i) {
        // Stored as positive magnitudes of the negative zeros.
        EXPECT_NEAR(a[i], -boost::math::airy_ai_zero<double>(i + 1), 1e-10);
        EXPECT_NEAR(std::abs(airy_aip(cdouble(-ap[i], 0.0))), 0.0, 1e-9);
    }
}

TEST(Fock, ContinuousAtSwitch) {
    const FockValues a = fock_residue_series(kFockSwitch);
    const FockValues b = fock_contour_integral(kFockSwitch);
    EXPECT_LT(std::abs(a.p_star - b.p_star) / std::abs(b.p_star), 1e-3);
    EXPECT_LT(std::abs(a.q_star - b.q_star) / std::abs(b.q_star), 1e-3);
}

TEST(Fock, ContourAgreesWithLitAsymptoticFarInLitRegion) {
    const FockValues a = fock_contour_integral(kFockLitLimit);
    const FockValues b = fock_lit_asymptotic(kFockLitLimit);
    EXPECT_LT(std::abs(a.p_star - b.p_star) / std::abs(b.p_star), 1e-2);
    EXPECT_LT(std::abs(a.q_star - b.q_star) / std::abs(b.q_star), 1e-2);
}

TEST(Fock, DecaysDeepInShadow) {
    double ps = 1e300, qs = 1e300;
    for (double xi = 1.0; xi <= 6.0; xi += 0.25) {
        const FockValues v = fock_functions(xi);
        // Remove the non-decaying 1/(2 sqrt(pi) xi) term that the UTD bracket cancels.
        const double sing = 1.0 / (2.0 * std::sqrt(kPi) * xi);
        const double p = std::abs(v.p_star - sing), q = std::abs(v.q_star - sing);
        EXPECT_LT(p, ps) << "xi=" << xi;
        EXPECT_LT(q, qs) << "xi=" << xi;
        ps = p;
        qs = q;
    }
}

TEST(Fock, FiniteAtZero) {
    const FockValues v = fock_functions(0.0);
    EXPECT_TRUE(std::isfinite(std::abs(v.p_star)));
    EXPECT_TRUE(std::isfinite(std::abs(v.q_star)));
    EXPECT_GT(std::abs(v.p_star), 0.0);
    EXPECT_GT(std::abs(v.q_star), 0.0);
}

TEST(Fock, RejectsNonFinite) {
    EXPECT_THROW(fock_functions(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
    EXPECT_THROW(fock_residue_series(-0.1), std::domain_error);
}
