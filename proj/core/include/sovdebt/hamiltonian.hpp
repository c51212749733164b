#pragma once

/// @file hamiltonian.hpp
/// @brief Hamiltonian of the debt management problem, its closed-form
/// minimizers and partial derivatives, and the uniform bound constants.
///
///   H(x, xi, p) = min_{u,v} { L(u) + c(v) - (u/p + x v) xi }
///                 + ((lambda + r)/p - lambda + sigma^2 - mu) x xi
///
/// By the envelope theorem H_xi equals the controlled drift
///   b(x, u, v, p) = ((lambda + r)/p - lambda + sigma^2 - mu - v) x - u/p
/// evaluated at the minimizing controls.

#include "sovdebt/model.hpp"

namespace sovdebt {

struct HamiltonianEval {
    double value = 0.0;
    double u_opt = 0.0;
    double v_opt = 0.0;
    double H_x = 0.0;
    double H_xi = 0.0;
    double H_p = 0.0;
};

struct BoundConstants {
    double theta_min = 1.0;
    double K1 = 0.0;
};

/// Minimizer of L(u) - u xi/p: zero when xi/p <= L'(0), else (L')^{-1}(xi/p).
double u_tilde(double xi, double p, const CostSpec& costs);

/// Minimizer of c(v) - v x xi: zero when x xi <= c'(0) or v_max = 0.
double v_tilde(double x, double xi, const CostSpec& costs);

/// Drift of the debt-to-income ratio under controls (u, v) at price p.
double controlled_drift(double x, double u, double v, double p, const ModelParams& params);

/// Full evaluation: value, minimizers and gradient. Negative xi is accepted
/// (controls clamp to zero) so that transient solver iterates stay valid.
HamiltonianEval eval_H(double x, double xi, double p, const ModelParams& params,
                       const CostSpec& costs);

/// Lower bound on the bond price: min{theta(x*), (r+lambda)/(r+lambda+v_max)}.
double theta_min(const ModelParams& params, const SalvageSpec& salvage);

/// K1 with |H| <= K1 xi and |H_xi| <= K1 on [0,x*] x [0,inf) x [theta_min,1].
double bound_K1(const ModelParams& params, double theta_min);

inline BoundConstants bound_constants(const ModelParams& params, const SalvageSpec& salvage) {
    const double tm = theta_min(params, salvage);
    return {tm, bound_K1(params, tm)};
}

}  // namespace sovdebt
