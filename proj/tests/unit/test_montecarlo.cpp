#include "fixtures.hpp"
#include "sovdebt/montecarlo.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace sovdebt;
using sovdebt::testing::base_model;

namespace {

// u = v = 0 and p = 1 everywhere
Feedback frozen_feedback(double x_star, double v_max) {
    const Grid g = Grid::uniform(101, x_star);
    return Feedback(g, std::vector<double>(g.n, 0.0), std::vector<double>(g.n, 0.0),
                    std::vector<double>(g.n, 1.0), v_max);
}

const Solution& base_solution() {
    static const Solution s = [] {
        SolverConfig cfg;
        cfg.n = 401;
        return continuation_solve(base_model(), cfg).solution;
    }();
    return s;
}

}  // namespace

TEST(SimConfig, Validation) {
    SimConfig s;
    EXPECT_NO_THROW(s.validate());
    s.dt = 0.0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = SimConfig{};
    s.n_paths = 0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Feedback, InterpolatesAndClamps) {
    const Grid g = Grid::uniform(3, 2.0);
    const Feedback fb(g, {0.0, 0.5, 1.0}, {0.0, 0.2, 0.9}, {1.0, 0.8, 0.6}, 0.5);
    EXPECT_DOUBLE_EQ(fb.u(0.5), 0.25);
    EXPECT_DOUBLE_EQ(fb.p(1.5), 0.7);
    EXPECT_LT(fb.u(2.0), 1.0);
    EXPECT_LT(fb.v(2.0), 0.5);
    EXPECT_DOUBLE_EQ(fb.u(-1.0), 0.0);
}

TEST(Horizon, DefaultFormula) {
    ModelParams p;
    const double T = default_horizon(p, 2.0);
    EXPECT_NEAR(T, std::log((2.0 / 0.05 + 5.0) / (0.001 * 5.0)) / 0.05, 1e-12);
    p.bankruptcy_cost = 0.0;
    EXPECT_NEAR(default_horizon(p, 2.0), std::log((2.0 / 0.05 + 1.0) / 0.001) / 0.05, 1e-12);
}

TEST(Simulate, StartingAtThresholdIsImmediateBankruptcy) {
    const Model m = base_model();
    const Feedback fb = Feedback::from_solution(base_solution(), m.params.v_max);
    SimConfig sim;
    sim.x0 = m.params.x_star;
    sim.n_paths = 100;
    const McResult r = estimate(fb, m, sim);
    EXPECT_EQ(r.threshold_count, 100u);
    EXPECT_DOUBLE_EQ(r.value.mean, m.params.bankruptcy_cost);
    EXPECT_DOUBLE_EQ(r.bond.mean, m.salvage.rate(m.params.x_star));
    EXPECT_EQ(r.value.standard_error, 0.0);
}

TEST(Simulate, ZeroCostWithoutBankruptcyPenaltyOrControls) {
    Model m = base_model();
    m.params.bankruptcy_cost = 0.0;
    const Feedback fb = frozen_feedback(m.params.x_star, m.params.v_max);
    SimConfig sim;
    sim.n_paths = 200;
    sim.horizon = 20.0;
    const McResult r = estimate(fb, m, sim);
    EXPECT_EQ(r.value.mean, 0.0);
}

TEST(Simulate, ParBondUnderFullSalvage) {
    Model m = base_model();
    m.params.v_max = 0.0;
    m.costs = CostSpec::barrier(0.5, 0.1, 0.0);
    m.salvage = SalvageSpec::linear(0.0, m.params.x_star);
    const Feedback fb = frozen_feedback(m.params.x_star, 0.0);
    SimConfig sim;
    sim.n_paths = 500;
    sim.horizon = 30.0;
    const McResult r = estimate(fb, m, sim);
    EXPECT_NEAR(r.bond.mean, 1.0, 1e-12);
}

TEST(Simulate, DeterministicAcrossThreadCounts) {
    const Model m = base_model();
    const Feedback fb = Feedback::from_solution(base_solution(), m.params.v_max);
    SimConfig sim;
    sim.n_paths = 400;
    sim.horizon = 10.0;
    const McResult a = estimate(fb, m, sim);
    sim.threads = 3;
    const McResult b = estimate(fb, m, sim);
    EXPECT_EQ(a.value.mean, b.value.mean);
    EXPECT_EQ(a.value.standard_error, b.value.standard_error);
    EXPECT_EQ(a.bond.mean, b.bond.mean);
    EXPECT_EQ(a.hazard_count, b.hazard_count);
    sim.seed += 1;
    EXPECT_NE(estimate(fb, m, sim).value.mean, a.value.mean);
}

TEST(Simulate, PathStreamsAreIndependentOfEachOther) {
    const Model m = base_model();
    const Feedback fb = Feedback::from_solution(base_solution(), m.params.v_max);
    SimConfig sim;
    sim.horizon = 10.0;
    const PathOutcome a = simulate_path(fb, m, sim, 17);
    const PathOutcome b = simulate_path(fb, m, sim, 17);
    const PathOutcome c = simulate_path(fb, m, sim, 18);
    EXPECT_EQ(a.discounted_cost, b.discounted_cost);
    EXPECT_EQ(a.bankruptcy_time, b.bankruptcy_time);
    EXPECT_NE(a.discounted_cost, c.discounted_cost);
}

TEST(Deviation, ZeroBumpIsExactlyZero) {
    const Model m = base_model();
    const Feedback fb = Feedback::from_solution(base_solution(), m.params.v_max);
    SimConfig sim;
    sim.n_paths = 200;
    sim.horizon = 10.0;
    const Perturbation pert{Perturbation::Control::U, 0.0, 0.2, 0.6};
    const DeviationResult d = deviation_test(fb, pert, m, sim);
    EXPECT_EQ(d.delta_cost, 0.0);
    EXPECT_EQ(d.standard_error, 0.0);
    EXPECT_EQ(d.base_cost, d.perturbed_cost);
}

TEST(Deviation, LargeBumpCostsMore) {
    const Model m = base_model();
    const Feedback fb = Feedback::from_solution(base_solution(), m.params.v_max);
    SimConfig sim;
    sim.n_paths = 2000;
    sim.x0 = 0.75;
    const Perturbation pert{Perturbation::Control::U, 0.4, 0.0, 1.5};
    const DeviationResult d = deviation_test(fb, pert, m, sim);
    EXPECT_GT(d.ci_low, 0.0) << d.delta_cost << " +- " << d.standard_error;
}

TEST(Hazard, FrozenStateGivesExponentialBankruptcyTimes) {
    Model m = base_model();
    m.params.sigma = 0.0;
    m.params.mu = m.params.r;  // zero drift with u = v = 0 and p = 1
    const Feedback fb = frozen_feedback(m.params.x_star, m.params.v_max);
    SimConfig sim;
    sim.n_paths = 5000;
    sim.dt = 1e-2;
    sim.horizon = 1e4;
    const std::vector<double> t = bankruptcy_times(fb, m, sim);
    const double rate = m.risk.rate(sim.x0);
    const KsResult ks = ks_test_exponential(t, rate);
    EXPECT_GT(ks.p_value, 0.01) << ks.statistic;
    const double mean = pairwise_sum(t.data(), t.size()) / static_cast<double>(t.size());
    EXPECT_NEAR(mean, 1.0 / rate, 4.0 / rate / std::sqrt(5000.0));
}

TEST(Ks, RejectsWrongRate) {
    std::mt19937_64 gen(5);
    std::exponential_distribution<double> e(2.0);
    std::vector<double> s(2000);
    for (double& x : s) x = e(gen);
    EXPECT_GT(ks_test_exponential(s, 2.0).p_value, 0.01);
    EXPECT_LT(ks_test_exponential(s, 1.5).p_value, 1e-6);
}

TEST(PairwiseSum, MatchesAccumulateAndHandlesEdgeSizes) {
    std::vector<double> v(1000);
    std::iota(v.begin(), v.end(), 1.0);
    EXPECT_EQ(pairwise_sum(v.data(), v.size()), 500500.0);
    EXPECT_EQ(pairwise_sum(v.data(), 0), 0.0);
    EXPECT_EQ(pairwise_sum(v.data(), 1), 1.0);
}
