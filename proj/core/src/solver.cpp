#include "sovdebt/solver.hpp"

#include "sovdebt/hamiltonian.hpp"
#include "tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sovdebt {

Grid Grid::uniform(std::size_t n, double x_star) {
    if (n < 3) throw std::invalid_argument("grid needs at least 3 nodes");
    if (!(x_star > 0.0)) throw std::invalid_argument("grid needs x_star > 0");
    Grid g;
    g.n = n;
    g.x_star = x_star;
    g.h = x_star / static_cast<double>(n - 1);
    g.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) g.nodes[i] = static_cast<double>(i) * g.h;
    g.nodes.front() = 0.0;
    g.nodes.back() = x_star;
    return g;
}

void SolverConfig::validate() const {
    if (n < 101) throw std::invalid_argument("solver grid needs n >= 101");
    if (epsilon_schedule.empty()) throw std::invalid_argument("epsilon schedule is empty");
    for (std::size_t i = 0; i < epsilon_schedule.size(); ++i) {
        const double e = epsilon_schedule[i];
        if (!(e > 0.0 && e < 0.5))
            throw std::invalid_argument("epsilon schedule entries must lie in (0, 1/2)");
        if (i > 0 && !(e < epsilon_schedule[i - 1]))
            throw std::invalid_argument("epsilon schedule must be strictly decreasing");
    }
    if (!(time_step_safety > 0.0)) throw std::invalid_argument("time_step_safety must be positive");
    if (!(steady_state_tol > 0.0)) throw std::invalid_argument("steady_state_tol must be positive");
    if (max_iterations == 0) throw std::invalid_argument("max_iterations must be positive");
    if (!(howard_threshold > 0.0)) throw std::invalid_argument("howard_threshold must be positive");
}

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Frozen-control stencil at the interior nodes for a given (V, p) state.
struct Stencil {
    std::vector<double> drift;
    std::vector<double> u;
    std::vector<double> v;
    std::vector<double> running;
};

/// State-independent coefficients of the regularized system on a grid.
class Discretization {
public:
    Discretization(const Model& model, double epsilon, const Grid& grid)
        : model_(model), eps_(epsilon), grid_(grid), risk_(model.risk, epsilon) {
        const std::size_t n = grid.n;
        const double s2 = model.params.sigma * model.params.sigma;
        diffusion_.resize(n);
        rho_.resize(n);
        theta_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.nodes[i];
            diffusion_[i] = 0.5 * s2 * x * x + eps_;
            rho_[i] = risk_.rate(x);
            theta_[i] = model.salvage.rate(x);
        }
    }

    std::size_t size() const { return grid_.n; }
    double h() const { return grid_.h; }
    double epsilon() const { return eps_; }
    double max_diffusion() const { return diffusion_.back(); }

    void stencil(const std::vector<double>& V, const std::vector<double>& p, Stencil& st) const {
        const std::size_t n = size();
        const double h = grid_.h;
        st.drift.assign(n, 0.0);
        st.u.assign(n, 0.0);
        st.v.assign(n, 0.0);
        st.running.assign(n, 0.0);
        const CostSpec& costs = model_.costs;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double x = grid_.nodes[i];
            const double xi = (V[i + 1] - V[i - 1]) / (2.0 * h);
            const double price = p[i] + eps_;
            const HamiltonianEval ev = eval_H(x, xi, price, model_.params, costs);
            st.u[i] = ev.u_opt;
            st.v[i] = ev.v_opt;
            st.drift[i] = ev.H_xi;
            st.running[i] = (ev.u_opt > 0.0 ? costs.payment_cost(ev.u_opt) : 0.0) +
                            (ev.v_opt > 0.0 ? costs.devaluation_cost(ev.v_opt) : 0.0);
        }
    }

    void residuals(const std::vector<double>& V, const std::vector<double>& p, const Stencil& st,
                   std::vector<double>& res_V, std::vector<double>& res_p) const {
        const std::size_t n = size();
        const double h = grid_.h;
        const double h2 = h * h;
        const ModelParams& prm = model_.params;
        const double B = prm.bankruptcy_cost;
        const double lr = prm.r + prm.lambda;
        res_V.assign(n, 0.0);
        res_p.assign(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double a = diffusion_[i];
            const double b = st.drift[i];
            const double bp = std::max(b, 0.0);
            const double bm = std::min(b, 0.0);
            const double rho = rho_[i];

            const double dVf = (V[i + 1] - V[i]) / h;
            const double dVb = (V[i] - V[i - 1]) / h;
            const double d2V = (V[i + 1] - 2.0 * V[i] + V[i - 1]) / h2;
            res_V[i] = (prm.r + rho) * V[i] - rho * B - st.running[i] - bp * dVf - bm * dVb - a * d2V;

            const double dpf = (p[i + 1] - p[i]) / h;
            const double dpb = (p[i] - p[i - 1]) / h;
            const double d2p = (p[i + 1] - 2.0 * p[i] + p[i - 1]) / h2;
            res_p[i] = (lr + st.v[i] + rho) * p[i] - lr - rho * theta_[i] - bp * dpf - bm * dpb -
                       a * d2p;
        }
    }

    /// Solves (I/dt + A) delta = -res for both equations with frozen controls;
    /// inv_dt = 0 is the Howard step.
    void implicit_update(const Stencil& st, const std::vector<double>& res_V,
                         const std::vector<double>& res_p, double inv_dt,
                         std::vector<double>& delta_V, std::vector<double>& delta_p) {
        const std::size_t n = size();
        const double h = grid_.h;
        const double h2 = h * h;
        const ModelParams& prm = model_.params;
        const double lr = prm.r + prm.lambda;
        lower_.assign(n, 0.0);
        upper_.assign(n, 0.0);
        diag_V_.assign(n, 1.0);
        diag_p_.assign(n, 1.0);
        rhs_V_.assign(n, 0.0);
        rhs_p_.assign(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double a = diffusion_[i];
            const double b = st.drift[i];
            const double bp = std::max(b, 0.0);
            const double bm = std::min(b, 0.0);
            lower_[i] = -a / h2 + bm / h;
            upper_[i] = -a / h2 - bp / h;
            const double transport = 2.0 * a / h2 + (bp - bm) / h;
            diag_V_[i] = inv_dt + prm.r + rho_[i] + transport;
            diag_p_[i] = inv_dt + lr + st.v[i] + rho_[i] + transport;
            rhs_V_[i] = -res_V[i];
            rhs_p_[i] = -res_p[i];
        }
        // Dirichlet rows: delta = 0 with no coupling into the interior.
        upper_[0] = 0.0;
        lower_[n - 1] = 0.0;
        delta_V.assign(n, 0.0);
        delta_p.assign(n, 0.0);
        detail::solve_tridiagonal(lower_, diag_V_, upper_, rhs_V_, delta_V, scratch_);
        detail::solve_tridiagonal(lower_, diag_p_, upper_, rhs_p_, delta_p, scratch_);
        delta_V.front() = delta_V.back() = 0.0;
        delta_p.front() = delta_p.back() = 0.0;
    }

private:
    const Model& model_;
    double eps_;
    const Grid& grid_;
    RegularizedRisk risk_;
    std::vector<double> diffusion_, rho_, theta_;
    std::vector<double> lower_, upper_, diag_V_, diag_p_, rhs_V_, rhs_p_, scratch_;
};

void impose_boundary(const Model& model, std::vector<double>& V, std::vector<double>& p) {
    V.front() = 0.0;
    V.back() = model.params.bankruptcy_cost;
    p.front() = 1.0;
    p.back() = model.salvage.rate(model.params.x_star);
}

std::string level_message(const char* what, double eps, std::size_t it, double res) {
    std::ostringstream os;
    os.precision(6);
    os << what << " at epsilon " << eps << " after " << it << " iterations (residual " << res
       << ")";
    return os.str();
}

}  // namespace

double Solution::residual_norm_V() const { return max_abs(res_V); }
double Solution::residual_norm_p() const { return max_abs(res_p); }

double ContinuationTrace::continuation_error() const {
    return levels.size() < 2 ? 0.0 : levels.back().diff();
}

std::vector<double> differentiate(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    std::vector<double> d(n, 0.0);
    if (n < 3) return d;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return d;
}

FeedbackControls extract_feedback(const Solution& sol, const CostSpec& costs) {
    const std::size_t n = sol.grid.n;
    const std::vector<double> dV = differentiate(sol.V, sol.grid.h);
    FeedbackControls fb;
    fb.u_star.resize(n);
    fb.v_star.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = dV[i];
        fb.u_star[i] = xi > 0.0 ? u_tilde(xi, sol.p[i], costs) : 0.0;
        fb.v_star[i] = xi > 0.0 ? v_tilde(sol.grid.nodes[i], xi, costs) : 0.0;
    }
    return fb;
}

ResidualPair residual(const Solution& sol, const Model& model) {
    Discretization disc(model, sol.epsilon, sol.grid);
    Stencil st;
    disc.stencil(sol.V, sol.p, st);
    ResidualPair out;
    disc.residuals(sol.V, sol.p, st, out.V, out.p);
    return out;
}

void finalize_solution(Solution& sol, const Model& model) {
    sol.dV = differentiate(sol.V, sol.grid.h);
    sol.dp = differentiate(sol.p, sol.grid.h);
    FeedbackControls fb = extract_feedback(sol, model.costs);
    sol.u_star = std::move(fb.u_star);
    sol.v_star = std::move(fb.v_star);
    ResidualPair res = residual(sol, model);
    sol.res_V = std::move(res.V);
    sol.res_p = std::move(res.p);
}

Solution solve_regularized(const Model& model, double epsilon, const Grid& grid,
                           const SolverConfig& config, const Solution* warm_start) {
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw std::invalid_argument("regularization level must lie in (0, 1/2)");
    if (grid.n < 3 || grid.nodes.size() != grid.n)
        throw std::invalid_argument("invalid grid");
    if (std::abs(grid.x_star - model.params.x_star) > 0.0)
        throw std::invalid_argument("grid does not span [0, x_star] of the model");

    const std::size_t n = grid.n;
    Solution sol;
    sol.grid = grid;
    sol.epsilon = epsilon;

    if (warm_start != nullptr) {
        if (warm_start->grid.n != n || warm_start->grid.x_star != grid.x_star)
            throw std::invalid_argument("warm start lives on a different grid");
        sol.V = warm_start->V;
        sol.p = warm_start->p;
    } else {
        const double B = model.params.bankruptcy_cost;
        const double theta_end = model.salvage.rate(model.params.x_star);
        sol.V.resize(n);
        sol.p.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = grid.nodes[i] / grid.x_star;
            sol.V[i] = s * B;
            sol.p[i] = 1.0 + s * (theta_end - 1.0);
        }
    }
    impose_boundary(model, sol.V, sol.p);

    Discretization disc(model, epsilon, grid);
    const double dt0 = config.time_step_safety * grid.h * grid.h / (2.0 * disc.max_diffusion());
    double dt = dt0;
    bool howard = false;

    Stencil st;
    std::vector<double> rV, rp, dV, dp;
    std::vector<double> best_V, best_p;
    double prev_res = std::numeric_limits<double>::infinity();
    double res = prev_res;
    bool reached = false;
    std::size_t it = 0;

    for (;; ++it) {
        disc.stencil(sol.V, sol.p, st);
        disc.residuals(sol.V, sol.p, st, rV, rp);
        res = std::max(max_abs(rV), max_abs(rp));
        if (!std::isfinite(res) || !all_finite(sol.V) || !all_finite(sol.p)) {
            sol.iterations = it;
            throw InstabilityDetected(level_message("non-finite iterate", epsilon, it, res), sol);
        }

        if (reached) {
            // Polishing past tolerance: keep going only while it pays off.
            if (!(res < 0.5 * prev_res)) {
                sol.V = best_V;
                sol.p = best_p;
                res = prev_res;
                break;
            }
            if (res <= 1e-2 * config.steady_state_tol || it >= config.max_iterations) break;
        } else if (res <= config.steady_state_tol) {
            reached = true;
        }
        if (!reached && it >= config.max_iterations) break;

        if (it > 0 && !reached) {
            if (res < prev_res) {
                dt *= 2.0;
                if (config.policy_iteration && res < config.howard_threshold) howard = true;
            } else {
                howard = false;
                dt = std::max(dt0, 0.25 * dt);
            }
        }
        if (reached) {
            best_V = sol.V;
            best_p = sol.p;
        }
        prev_res = res;

        const double inv_dt = howard || reached ? 0.0 : 1.0 / dt;
        disc.implicit_update(st, rV, rp, inv_dt, dV, dp);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            sol.V[i] += dV[i];
            sol.p[i] += dp[i];
        }
    }

    sol.iterations = it;
    finalize_solution(sol, model);
    sol.converged = sol.max_residual() <= config.steady_state_tol;
    if (!sol.converged)
        throw NonConvergence(level_message("no steady state", epsilon, it, sol.max_residual()), sol);
    return sol;
}

ContinuationResult continuation_solve(const Model& model, const SolverConfig& config) {
    config.validate();
    const Grid grid = Grid::uniform(config.n, model.params.x_star);
    const double lo = 0.05 * model.params.x_star;
    const double hi = 0.95 * model.params.x_star;

    ContinuationResult out;
    std::optional<Solution> prev;
    for (double eps : config.epsilon_schedule) {
        Solution sol;
        try {
            sol = solve_regularized(model, eps, grid, config, prev ? &*prev : nullptr);
        } catch (const NonConvergence& e) {
            throw NonConvergence(e.what(), e.diagnostics(), out.trace);
        } catch (const InstabilityDetected& e) {
            throw InstabilityDetected(e.what(), e.diagnostics(), out.trace);
        }
        ContinuationLevel lvl;
        lvl.epsilon = eps;
        lvl.iterations = sol.iterations;
        lvl.max_residual = sol.max_residual();
        if (prev) {
            for (std::size_t i = 0; i < grid.n; ++i) {
                const double x = grid.nodes[i];
                if (x < lo || x > hi) continue;
                lvl.diff_V = std::max(lvl.diff_V, std::abs(sol.V[i] - prev->V[i]));
                lvl.diff_p = std::max(lvl.diff_p, std::abs(sol.p[i] - prev->p[i]));
            }
        }
        out.trace.levels.push_back(lvl);
        prev = std::move(sol);
    }
    out.solution = std::move(*prev);
    return out;
}

}  // namespace sovdebt
