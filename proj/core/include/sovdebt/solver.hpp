#pragma once

/// @file solver.hpp
/// @brief Steady states of the regularized coupled system for the value
/// function V and bond price p, epsilon-continuation toward the degenerate
/// limit, and feedback extraction.
///
/// For a regularization level eps the stationary equations on (0, x*) are
///
///   (r + rho_eps) V - rho_eps B - H(x, V', p + eps) - (sigma^2 x^2/2 + eps) V'' = 0
///   (r + lambda + v~(x, V')) p - (r + lambda) - rho_eps (theta - p)
///       - H_xi(x, V', p + eps) p' - (sigma^2 x^2/2 + eps) p'' = 0
///
/// with V(0) = 0, V(x*) = B, p(0) = 1, p(x*) = theta(x*).
///
/// Discretization: uniform grid, controls from the central difference of V,
/// first-derivative terms upwinded on the sign of the controlled drift, central
/// second differences. The resulting tridiagonal operators are M-matrices.
/// Iteration: linearly implicit pseudo-time stepping of the parabolic
/// relaxation with a growing step; once the residual drops below a threshold
/// the step becomes infinite, which is Howard policy iteration with frozen
/// controls.

#include "sovdebt/model.hpp"

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sovdebt {

struct Grid {
    std::size_t n = 0;
    double x_star = 0.0;
    double h = 0.0;
    std::vector<double> nodes;

    /// n >= 3 uniform nodes with x_0 = 0 and x_{n-1} = x_star exactly.
    static Grid uniform(std::size_t n, double x_star);
};

struct SolverConfig {
    std::size_t n = 801;
    std::vector<double> epsilon_schedule{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    /// Initial pseudo-time step as a fraction of the explicit stability limit
    /// h^2 / (2 (sigma^2 x*^2/2 + eps)).
    double time_step_safety = 0.9;
    double steady_state_tol = 1e-8;
    std::size_t max_iterations = 5000;
    /// Switch to Howard iteration once the residual is below howard_threshold.
    bool policy_iteration = true;
    double howard_threshold = 1e-3;

    /// Throws std::invalid_argument on an inconsistent configuration.
    void validate() const;
};

struct Solution {
    Grid grid;
    std::vector<double> V, dV, p, dp, u_star, v_star, res_V, res_p;
    double epsilon = 0.0;
    std::size_t iterations = 0;
    bool converged = false;

    double residual_norm_V() const;
    double residual_norm_p() const;
    double max_residual() const { return std::max(residual_norm_V(), residual_norm_p()); }
};

struct ResidualPair {
    std::vector<double> V;
    std::vector<double> p;
};

struct FeedbackControls {
    std::vector<double> u_star;
    std::vector<double> v_star;
};

struct ContinuationLevel {
    double epsilon = 0.0;
    std::size_t iterations = 0;
    double max_residual = 0.0;
    /// Max-norm change from the previous level on [0.05 x*, 0.95 x*]; zero at
    /// the first level.
    double diff_V = 0.0;
    double diff_p = 0.0;

    double diff() const { return std::max(diff_V, diff_p); }
};

struct ContinuationTrace {
    std::vector<ContinuationLevel> levels;

    /// Interior change between the last two levels.
    double continuation_error() const;
};

struct ContinuationResult {
    Solution solution;
    ContinuationTrace trace;
};

/// Base of solver failures; carries the diagnostics of the failed solve.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, Solution diagnostics, ContinuationTrace trace = {})
        : std::runtime_error(what), diagnostics_(std::move(diagnostics)), trace_(std::move(trace)) {}

    const Solution& diagnostics() const noexcept { return diagnostics_; }
    double epsilon() const noexcept { return diagnostics_.epsilon; }
    const ContinuationTrace& trace() const noexcept { return trace_; }

private:
    Solution diagnostics_;
    ContinuationTrace trace_;
};

/// Iteration budget exhausted with the residual above tolerance.
class NonConvergence : public SolverError {
public:
    using SolverError::SolverError;
};

/// NaN or Inf appeared in an iterate.
class InstabilityDetected : public SolverError {
public:
    using SolverError::SolverError;
};

/// Solves the regularized stationary system at level `epsilon` on `grid`.
/// Cold start: V linear from 0 to B, p linear from 1 to theta(x*).
Solution solve_regularized(const Model& model, double epsilon, const Grid& grid,
                           const SolverConfig& config, const Solution* warm_start = nullptr);

/// Solves along config.epsilon_schedule, warm-starting each level from the
/// previous one. Solver errors propagate with the failing level recorded.
ContinuationResult continuation_solve(const Model& model, const SolverConfig& config);

/// Per-node stationary residuals with the solver's own stencils; zero at the
/// Dirichlet nodes.
ResidualPair residual(const Solution& solution, const Model& model);

/// u*(x_i) = u~(V'(x_i), p(x_i)), v*(x_i) = v~(x_i, V'(x_i)) with central
/// differences inside and second-order one-sided differences at the ends.
FeedbackControls extract_feedback(const Solution& solution, const CostSpec& costs);

/// Central differences inside, second-order one-sided at the endpoints.
std::vector<double> differentiate(const std::vector<double>& f, double h);

/// Fills dV, dp, u_star, v_star and the residual columns from V and p.
void finalize_solution(Solution& solution, const Model& model);

}  // namespace sovdebt
