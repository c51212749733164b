#include "fixtures.hpp"
#include "sovdebt/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace sovdebt;
using sovdebt::testing::base_model;

TEST(CostSpec, BarrierPaymentCostValues) {
    const CostSpec c = CostSpec::barrier(0.5, 0.1, 0.5);
    EXPECT_DOUBLE_EQ(c.payment_cost(0.0), 0.0);
    EXPECT_DOUBLE_EQ(c.payment_cost(0.5), 0.75);  // 0.5*0.5 + 0.25/0.5
    EXPECT_DOUBLE_EQ(c.payment_marginal(0.0), 0.5);
    EXPECT_THROW(c.payment_cost(1.0), DomainError);
    EXPECT_THROW(c.payment_cost(-0.1), DomainError);
}

TEST(CostSpec, MarginalMatchesFiniteDifference) {
    const CostSpec c = CostSpec::barrier(0.3, 0.2, 0.4);
    const double h = 1e-6;
    for (double u : {0.1, 0.4, 0.8}) {
        const double fd = (c.payment_cost(u + h) - c.payment_cost(u - h)) / (2 * h);
        EXPECT_NEAR(c.payment_marginal(u), fd, 1e-6 * std::max(1.0, fd));
    }
    for (double v : {0.05, 0.2, 0.35}) {
        const double fd = (c.devaluation_cost(v + h) - c.devaluation_cost(v - h)) / (2 * h);
        EXPECT_NEAR(c.devaluation_marginal(v), fd, 1e-6 * std::max(1.0, fd));
    }
}

TEST(CostSpec, MarginalInverseRoundTrips) {
    const CostSpec c = CostSpec::barrier(0.5, 0.1, 0.5);
    for (double u : {1e-6, 0.2, 0.7, 0.99}) {
        EXPECT_NEAR(c.payment_marginal_inverse(c.payment_marginal(u)), u, 1e-12);
    }
    for (double v : {1e-6, 0.1, 0.45}) {
        EXPECT_NEAR(c.devaluation_marginal_inverse(c.devaluation_marginal(v)), v, 1e-12);
    }
    EXPECT_THROW(c.payment_marginal_inverse(0.5), DomainError);
}

TEST(CostSpec, DevaluationDisabledWhenVmaxZero) {
    const CostSpec c = CostSpec::barrier(0.5, 0.1, 0.0);
    EXPECT_FALSE(c.devaluation_enabled());
    EXPECT_THROW(c.devaluation_cost(0.1), DomainError);
}

TEST(RiskSpec, PowerFamily) {
    const RiskSpec r = RiskSpec::power(1.0, 0.5, 1.5);
    EXPECT_DOUBLE_EQ(r.rate(0.0), 0.0);
    EXPECT_NEAR(r.rate(0.5), 0.5 / std::sqrt(1.0), 1e-15);
    EXPECT_TRUE(std::isinf(r.rate(1.5)));
    EXPECT_THROW(r.rate(-0.1), DomainError);
    EXPECT_EQ(r.integrable_over_x(), std::optional<bool>(true));
    EXPECT_FALSE(r.fast_blowup());
    EXPECT_TRUE(RiskSpec::power(1.0, 3.0, 8.0).fast_blowup());
    EXPECT_EQ(RiskSpec::power(1.0, 2.0, 1.0).integrable_over_x(), std::optional<bool>(false));
}

TEST(RiskSpec, InverseByBisection) {
    const RiskSpec r = RiskSpec::power(1.0, 0.5, 1.5);
    for (double level : {0.1, 1.0, 100.0}) {
        const double x = r.inverse(level);
        EXPECT_NEAR(r.rate(x), level, 1e-9 * level);
    }
    // near x* the rate jumps by ~1e-4 relative between adjacent doubles, so
    // only bracketing is achievable
    const double x = r.inverse(1e6);
    EXPECT_LE(r.rate(std::nextafter(x, 0.0)), 1e6);
    EXPECT_GE(r.rate(std::nextafter(x, 2.0)), 1e6);
}

TEST(RiskSpec, CustomFastBlowupBySampling) {
    const RiskSpec fast = RiskSpec::custom([](double x) { return x / std::pow(1.0 - x, 3.0); }, 1.0);
    const RiskSpec slow = RiskSpec::custom([](double x) { return x / (1.0 - x); }, 1.0);
    EXPECT_TRUE(fast.fast_blowup());
    EXPECT_FALSE(slow.fast_blowup());
    EXPECT_FALSE(slow.integrable_over_x().has_value());
}

TEST(SalvageSpec, LinearAndLipschitz) {
    const SalvageSpec s = SalvageSpec::linear(0.4, 1.5);
    EXPECT_DOUBLE_EQ(s.rate(0.0), 1.0);
    EXPECT_NEAR(s.rate(1.5), 0.6, 1e-15);
    EXPECT_NEAR(s.lipschitz_near_zero(), 0.4 / 1.5, 1e-9);
}

TEST(RegularizedRisk, CapsAtInverseEpsilon) {
    const RiskSpec r = RiskSpec::power(1.0, 0.5, 1.5);
    const RegularizedRisk reg(r, 0.01);
    EXPECT_NEAR(r.rate(reg.crossover()), 100.0, 1e-8);
    EXPECT_DOUBLE_EQ(reg.rate(1.5), 100.0);
    EXPECT_DOUBLE_EQ(reg.rate(0.5), r.rate(0.5));
    EXPECT_LE(reg.rate(1.499), 100.0);
    EXPECT_THROW(RegularizedRisk(r, 0.5), std::invalid_argument);
    EXPECT_THROW(RegularizedRisk(r, 0.0), std::invalid_argument);
}

TEST(Validation, BaseModelPasses) {
    const ValidationReport rep = validate_params(base_model());
    EXPECT_TRUE(rep.passed()) << (rep.first_failure() ? rep.first_failure()->name : "");
}

TEST(Validation, ZeroSigmaFails) {
    Model m = base_model();
    m.params.sigma = 0.0;
    const ValidationReport rep = validate_params(m);
    ASSERT_FALSE(rep.passed());
    EXPECT_EQ(rep.first_failure()->name, "sigma > 0");
}

TEST(Validation, IncreasingSalvageFails) {
    Model m = base_model();
    m.salvage = SalvageSpec::linear(-0.2, 1.5);
    const ValidationReport rep = validate_params(m);
    ASSERT_FALSE(rep.passed());
    const AssumptionCheck* bad = rep.first_failure();
    EXPECT_NE(bad->detail.find("increases"), std::string::npos) << bad->detail;
    ASSERT_TRUE(bad->witness.has_value());
    EXPECT_GT(*bad->witness, 0.0);
}

TEST(Validation, RiskNotZeroAtOriginFails) {
    Model m = base_model();
    m.risk = RiskSpec::custom([](double x) { return 1.0 + x / (1.5 - x); }, 1.5);
    EXPECT_FALSE(validate_params(m).passed());
}

TEST(Validation, MismatchedThresholdFails) {
    Model m = base_model();
    m.risk = RiskSpec::power(1.0, 0.5, 2.0);
    EXPECT_FALSE(validate_params(m).passed());
}
