#pragma once

/// @file montecarlo.hpp
/// @brief Monte Carlo simulation of the controlled debt-to-income dynamics
///
///   dx = [((lambda + r)/p - lambda + sigma^2 - mu - v) x - u/p] dt - sigma x dW
///
/// with hazard-rate bankruptcy at intensity rho(x) and forced bankruptcy at x*.
/// Estimates the borrower's discounted cost and the lenders' bond payoff along
/// the feedback of a PDE solution.
///
/// Reproducibility: path i draws from its own mt19937_64 stream seeded with
/// splitmix64(seed, i), and sums are pairwise in path order, so results do not
/// depend on the number of worker threads.

#include "sovdebt/model.hpp"
#include "sovdebt/solver.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace sovdebt {

struct SimConfig {
    double dt = 1e-3;
    /// Truncation time T; when unset, default_horizon() is used.
    std::optional<double> horizon;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 20240601;
    double x0 = 0.75;
    std::size_t threads = 1;
    /// Salvage at hazard bankruptcy: theta(x*) instead of theta(x(T_B)).
    bool salvage_at_threshold = false;

    void validate() const;
};

/// Feedback (u*, v*) and bond price p sampled on a uniform grid; evaluated by
/// piecewise-linear interpolation and clamped to the admissible ranges.
class Feedback {
public:
    Feedback(Grid grid, std::vector<double> u, std::vector<double> v, std::vector<double> p,
             double v_max);
    static Feedback from_solution(const Solution& solution, double v_max);

    double u(double x) const;
    double v(double x) const;
    double p(double x) const;

    const Grid& grid() const noexcept { return grid_; }
    double max_u() const;
    double max_v() const;

private:
    double interp(const std::vector<double>& f, double x) const;

    Grid grid_;
    std::vector<double> u_, v_, p_;
    double v_max_;
    double u_cap_;
    double v_cap_;
};

/// Additive bump of one control on [from, to], clamped to the admissible range.
struct Perturbation {
    enum class Control { U, V };
    Control control = Control::U;
    double delta = 0.0;
    double from = 0.0;
    double to = 0.0;
};

/// Repaid: the ratio reached 0, where V(0) = 0 and p(0) = 1 stop the path.
enum class PathEnd { Hazard, Threshold, Repaid, Truncated };

const char* to_string(PathEnd cause);

struct PathOutcome {
    double bankruptcy_time = 0.0;
    PathEnd cause = PathEnd::Truncated;
    double discounted_cost = 0.0;
    double bond_payoff = 0.0;
    double final_x = 0.0;
};

struct McEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t n_paths = 0;
    double truncation_bias_bound = 0.0;
};

struct McResult {
    McEstimate value;
    McEstimate bond;
    double horizon = 0.0;
    double running_cost_bound = 0.0;
    std::size_t hazard_count = 0;
    std::size_t threshold_count = 0;
    std::size_t repaid_count = 0;
    std::size_t truncated_count = 0;
};

/// Upper bound on the running cost along the feedback: L(max u*) + c(max v*).
double running_cost_bound(const Feedback& feedback, const CostSpec& costs);

/// T = ln((C_run/r + B)/(0.001 B))/r; B is replaced by 1 when B = 0.
double default_horizon(const ModelParams& params, double running_cost_bound);

/// One trajectory from sim.x0 using the stream of `path_index`.
PathOutcome simulate_path(const Feedback& feedback, const Model& model, const SimConfig& sim,
                          std::uint64_t path_index, const Perturbation* perturbation = nullptr);

/// Cost and bond estimates from the same n_paths trajectories.
McResult estimate(const Feedback& feedback, const Model& model, const SimConfig& sim);

McEstimate estimate_value(const Feedback& feedback, const Model& model, const SimConfig& sim);
McEstimate estimate_bond_price(const Feedback& feedback, const Model& model, const SimConfig& sim);

struct DeviationResult {
    double delta_cost = 0.0;
    double standard_error = 0.0;
    double ci_low = 0.0;   ///< delta_cost - 3 SE
    double ci_high = 0.0;  ///< delta_cost + 3 SE
    double base_cost = 0.0;
    double perturbed_cost = 0.0;
};

/// J(perturbed) - J(u*, v*) with common random numbers and the paired SE.
DeviationResult deviation_test(const Feedback& feedback, const Perturbation& perturbation,
                               const Model& model, const SimConfig& sim);

/// Bankruptcy times of every path, in path order.
std::vector<double> bankruptcy_times(const Feedback& feedback, const Model& model,
                                     const SimConfig& sim);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against Exp(rate); the p-value uses the
/// asymptotic distribution with Stephens' small-sample correction.
KsResult ks_test_exponential(std::vector<double> samples, double rate);

/// Pairwise sum in index order.
double pairwise_sum(const double* data, std::size_t n);

}  // namespace sovdebt
