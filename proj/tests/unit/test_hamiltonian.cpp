#include "fixtures.hpp"
#include "sovdebt/hamiltonian.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <random>

using namespace sovdebt;
using sovdebt::testing::base_model;

namespace {

// Independent minimization of the control part by dense scanning, refined by
// ternary search on the convex objective.
double min_convex_1d(const std::function<double(double)>& f, double lo, double hi) {
    constexpr int kScan = 4000;
    double best = f(lo);
    int best_i = 0;
    for (int i = 1; i < kScan; ++i) {
        const double v = f(lo + (hi - lo) * i / kScan);
        if (v < best) {
            best = v;
            best_i = i;
        }
    }
    double a = lo + (hi - lo) * std::max(best_i - 1, 0) / kScan;
    double b = lo + (hi - lo) * std::min(best_i + 1, kScan - 1) / kScan;
    for (int it = 0; it < 200; ++it) {
        const double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
        if (f(m1) < f(m2)) b = m2;
        else a = m1;
    }
    return std::min(best, f(0.5 * (a + b)));
}

double H_oracle(double x, double xi, double p, const Model& m) {
    const ModelParams& prm = m.params;
    const double pay = min_convex_1d([&](double u) { return m.costs.payment_cost(u) - u * xi / p; },
                                     0.0, 1.0 - 1e-12);
    const double dev = min_convex_1d(
        [&](double v) { return m.costs.devaluation_cost(v) - x * v * xi; }, 0.0, prm.v_max * (1 - 1e-12));
    const double coef = (prm.lambda + prm.r) / p - prm.lambda + prm.sigma * prm.sigma - prm.mu;
    return pay + dev + coef * x * xi;
}

}  // namespace

TEST(Hamiltonian, MinimizersVanishBelowMarginalCostAtZero) {
    const Model m = base_model();
    EXPECT_EQ(u_tilde(0.4, 1.0, m.costs), 0.0);   // xi/p = 0.4 <= 0.5
    EXPECT_GT(u_tilde(0.6, 1.0, m.costs), 0.0);
    EXPECT_EQ(v_tilde(0.5, 0.1, m.costs), 0.0);   // x xi = 0.05 <= 0.1
    EXPECT_GT(v_tilde(1.0, 0.2, m.costs), 0.0);
    EXPECT_THROW(u_tilde(1.0, 0.0, m.costs), DomainError);
}

TEST(Hamiltonian, NoControlValueIsLinear) {
    const Model m = base_model();
    // x = 0.5, xi = 0.05, p = 1: both controls zero; H = (0.25 - 0.2 + 0.09 - 0.02) x xi
    const HamiltonianEval h = eval_H(0.5, 0.05, 1.0, m.params, m.costs);
    EXPECT_EQ(h.u_opt, 0.0);
    EXPECT_EQ(h.v_opt, 0.0);
    EXPECT_NEAR(h.value, 0.12 * 0.5 * 0.05, 1e-15);
}

TEST(Hamiltonian, MatchesIndependentMinimization) {
    const Model m = base_model();
    const double tm = theta_min(m.params, m.salvage);
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> ux(0.0, m.params.x_star), uxi(0.0, 5.0), up(tm, 1.0);
    for (int k = 0; k < 200; ++k) {
        const double x = ux(gen), xi = uxi(gen), p = up(gen);
        const HamiltonianEval h = eval_H(x, xi, p, m.params, m.costs);
        EXPECT_NEAR(h.value, H_oracle(x, xi, p, m), 1e-9) << x << " " << xi << " " << p;
    }
}

TEST(Hamiltonian, GradientMatchesCentralDifferences) {
    const Model m = base_model();
    const double tm = theta_min(m.params, m.salvage);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> ux(0.05, m.params.x_star), uxi(0.05, 5.0), up(tm, 1.0);
    const auto H = [&](double x, double xi, double p) { return eval_H(x, xi, p, m.params, m.costs).value; };
    int tested = 0;
    for (int k = 0; k < 300; ++k) {
        const double x = ux(gen), xi = uxi(gen), p = up(gen);
        // stay away from the switching surfaces of the minimizers
        if (std::abs(xi / p - m.costs.alpha_L()) < 1e-3 || std::abs(x * xi - m.costs.alpha_c()) < 1e-3)
            continue;
        ++tested;
        const HamiltonianEval h = eval_H(x, xi, p, m.params, m.costs);
        const double d = 1e-6;
        const double fx = (H(x + d, xi, p) - H(x - d, xi, p)) / (2 * d);
        const double fxi = (H(x, xi + d, p) - H(x, xi - d, p)) / (2 * d);
        const double fp = (H(x, xi, p + d) - H(x, xi, p - d)) / (2 * d);
        EXPECT_NEAR(h.H_x, fx, 1e-5 * std::max(1.0, std::abs(fx)));
        EXPECT_NEAR(h.H_xi, fxi, 1e-5 * std::max(1.0, std::abs(fxi)));
        EXPECT_NEAR(h.H_p, fp, 1e-5 * std::max(1.0, std::abs(fp)));
    }
    EXPECT_GT(tested, 250);
}

TEST(Hamiltonian, DriftEqualsHxi) {
    const Model m = base_model();
    const HamiltonianEval h = eval_H(1.2, 0.5, 0.8, m.params, m.costs);
    EXPECT_NEAR(controlled_drift(1.2, h.u_opt, h.v_opt, 0.8, m.params), h.H_xi, 1e-14);
}

TEST(BoundConstants, BaseValues) {
    const Model m = base_model();
    const BoundConstants bc = bound_constants(m.params, m.salvage);
    // theta(x*) = 0.6, (r+lambda)/(r+lambda+v_max) = 0.25/0.75
    EXPECT_NEAR(bc.theta_min, 1.0 / 3.0, 1e-15);
    // max{(0.75 + 0.09) 1.5, 3 + 0.72 * 1.5}
    EXPECT_NEAR(bc.K1, 4.08, 1e-12);
}

TEST(BoundConstants, UniformBoundsHoldOnSamples) {
    const Model m = base_model();
    const BoundConstants bc = bound_constants(m.params, m.salvage);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> ux(0.0, m.params.x_star), uxi(0.0, 50.0),
        up(bc.theta_min, 1.0);
    for (int k = 0; k < 2000; ++k) {
        const double x = ux(gen), xi = uxi(gen), p = up(gen);
        const HamiltonianEval h = eval_H(x, xi, p, m.params, m.costs);
        EXPECT_LE(std::abs(h.value), bc.K1 * xi + 1e-12);
        EXPECT_LE(std::abs(h.H_xi), bc.K1 + 1e-12);
    }
}
