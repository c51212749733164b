#include "sovdebt/hamiltonian.hpp"

#include <algorithm>
#include <string>

namespace sovdebt {

double u_tilde(double xi, double p, const CostSpec& costs) {
    if (!(p > 0.0)) throw DomainError("bond price must be positive, got " + std::to_string(p));
    const double s = xi / p;
    if (s <= costs.alpha_L()) return 0.0;
    return costs.payment_marginal_inverse(s);
}

double v_tilde(double x, double xi, const CostSpec& costs) {
    if (!costs.devaluation_enabled()) return 0.0;
    const double s = x * xi;
    if (s <= costs.alpha_c()) return 0.0;
    return costs.devaluation_marginal_inverse(s);
}

double controlled_drift(double x, double u, double v, double p, const ModelParams& prm) {
    return ((prm.lambda + prm.r) / p - prm.lambda + prm.sigma * prm.sigma - prm.mu - v) * x - u / p;
}

HamiltonianEval eval_H(double x, double xi, double p, const ModelParams& prm,
                       const CostSpec& costs) {
    if (!(p > 0.0)) throw DomainError("bond price must be positive, got " + std::to_string(p));
    HamiltonianEval out;
    const double sig2 = prm.sigma * prm.sigma;
    const double lr = prm.lambda + prm.r;
    const double base_coef = lr / p - prm.lambda + sig2 - prm.mu;

    out.u_opt = xi > 0.0 ? u_tilde(xi, p, costs) : 0.0;
    out.v_opt = xi > 0.0 ? v_tilde(x, xi, costs) : 0.0;
    const double u = out.u_opt;
    const double v = out.v_opt;

    const double running = (u > 0.0 ? costs.payment_cost(u) : 0.0) +
                           (v > 0.0 ? costs.devaluation_cost(v) : 0.0);
    out.value = running - (u / p + x * v) * xi + base_coef * x * xi;

    // (lambda + r) - p (lambda + mu + v - sigma^2)
    const double bracket = lr - p * (prm.lambda + prm.mu + v - sig2);
    out.H_x = bracket * xi / p;
    out.H_xi = (x * bracket - u) / p;
    out.H_p = (u - x * lr) * xi / (p * p);
    return out;
}

double theta_min(const ModelParams& prm, const SalvageSpec& salvage) {
    const double lr = prm.r + prm.lambda;
    return std::min(salvage.rate(prm.x_star), lr / (lr + prm.v_max));
}

double bound_K1(const ModelParams& prm, double tm) {
    const double lr = prm.lambda + prm.r;
    const double upper = (lr / tm + prm.sigma * prm.sigma) * prm.x_star;
    const double lower = 1.0 / tm + (prm.lambda + prm.mu + prm.v_max) * prm.x_star;
    return std::max(upper, lower);
}

}  // namespace sovdebt
