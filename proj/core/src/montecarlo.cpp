#include "sovdebt/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace sovdebt {

namespace {

constexpr double kRhoClamp = 1.0 - 1e-8;
constexpr double kControlMargin = 1e-6;

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t path_seed(std::uint64_t root, std::uint64_t index) {
    return splitmix64(splitmix64(root) ^ index);
}

// (1 - e^{-a dt})/a, continuous at a = 0.
double discount_integral(double a, double dt) {
    const double z = a * dt;
    if (std::abs(z) < 1e-8) return dt * (1.0 - 0.5 * z);
    return -std::expm1(-z) / a;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
}

double standard_error_of(std::vector<double> v, double mean) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    for (double& e : v) e = (e - mean) * (e - mean);
    return std::sqrt(pairwise_sum(v.data(), n) / static_cast<double>(n - 1) / static_cast<double>(n));
}

McEstimate summarize(const std::vector<double>& samples, double bias) {
    McEstimate e;
    e.n_paths = samples.size();
    e.mean = mean_of(samples);
    e.standard_error = standard_error_of(samples, e.mean);
    e.truncation_bias_bound = bias;
    return e;
}

// Runs f(i) for i in [0, n) over `threads` workers with static contiguous chunks.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([lo, hi, &f] {
            for (std::size_t i = lo; i < hi; ++i) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

double resolved_horizon(const Feedback& fb, const Model& model, const SimConfig& sim) {
    return sim.horizon ? *sim.horizon
                       : default_horizon(model.params, running_cost_bound(fb, model.costs));
}

}  // namespace

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("sim.dt must be positive");
    if (horizon && !(*horizon > 0.0)) throw std::invalid_argument("sim.horizon must be positive");
    if (n_paths == 0) throw std::invalid_argument("sim.n_paths must be positive");
    if (!(x0 >= 0.0)) throw std::invalid_argument("sim.x0 must be non-negative");
    if (threads == 0) throw std::invalid_argument("sim.threads must be positive");
}

// ---------------------------------------------------------------------------
// Feedback

Feedback::Feedback(Grid grid, std::vector<double> u, std::vector<double> v, std::vector<double> p,
                   double v_max)
    : grid_(std::move(grid)), u_(std::move(u)), v_(std::move(v)), p_(std::move(p)), v_max_(v_max) {
    const std::size_t n = grid_.nodes.size();
    if (n < 2 || u_.size() != n || v_.size() != n || p_.size() != n)
        throw std::invalid_argument("feedback columns do not match the grid");
    u_cap_ = 1.0 - kControlMargin;
    v_cap_ = v_max_ * (1.0 - kControlMargin);
}

Feedback Feedback::from_solution(const Solution& s, double v_max) {
    return Feedback(s.grid, s.u_star, s.v_star, s.p, v_max);
}

double Feedback::interp(const std::vector<double>& f, double x) const {
    const std::size_t n = grid_.nodes.size();
    if (x <= 0.0) return f.front();
    if (x >= grid_.x_star) return f.back();
    const double s = x / grid_.h;
    const std::size_t i = std::min(static_cast<std::size_t>(s), n - 2);
    const double w = s - static_cast<double>(i);
    return (1.0 - w) * f[i] + w * f[i + 1];
}

double Feedback::u(double x) const { return std::clamp(interp(u_, x), 0.0, u_cap_); }
double Feedback::v(double x) const { return std::clamp(interp(v_, x), 0.0, v_cap_); }
double Feedback::p(double x) const { return std::clamp(interp(p_, x), 1e-12, 1.0); }

double Feedback::max_u() const {
    return std::clamp(*std::max_element(u_.begin(), u_.end()), 0.0, u_cap_);
}
double Feedback::max_v() const {
    return std::clamp(*std::max_element(v_.begin(), v_.end()), 0.0, v_cap_);
}

// ---------------------------------------------------------------------------

const char* to_string(PathEnd cause) {
    switch (cause) {
        case PathEnd::Hazard: return "hazard";
        case PathEnd::Threshold: return "threshold";
        case PathEnd::Repaid: return "repaid";
        case PathEnd::Truncated: return "truncated";
    }
    return "?";
}

double pairwise_sum(const double* data, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

double running_cost_bound(const Feedback& fb, const CostSpec& costs) {
    double c = costs.payment_cost(fb.max_u());
    if (costs.devaluation_enabled()) c += costs.devaluation_cost(fb.max_v());
    return c;
}

double default_horizon(const ModelParams& prm, double c_run) {
    const double B = prm.bankruptcy_cost > 0.0 ? prm.bankruptcy_cost : 1.0;
    return std::log((c_run / prm.r + B) / (0.001 * B)) / prm.r;
}

PathOutcome simulate_path(const Feedback& fb, const Model& model, const SimConfig& sim,
                          std::uint64_t path_index, const Perturbation* pert) {
    const ModelParams& prm = model.params;
    const CostSpec& costs = model.costs;
    const double xs = prm.x_star;
    const double B = prm.bankruptcy_cost;
    const double lr = prm.lambda + prm.r;
    const double dt = sim.dt;
    const double sqdt = std::sqrt(dt);
    const double T = resolved_horizon(fb, model, sim);
    const double rho_cap = model.risk.rate(xs * kRhoClamp);
    const auto rho = [&](double x) { return x >= xs * kRhoClamp ? rho_cap : model.risk.rate(x); };

    PathOutcome out;
    double x = std::clamp(sim.x0, 0.0, xs);
    if (x >= xs) {
        out.cause = PathEnd::Threshold;
        out.discounted_cost = B;
        out.bond_payoff = model.salvage.rate(xs);
        out.final_x = xs;
        return out;
    }

    if (x <= 0.0) {
        out.cause = PathEnd::Repaid;
        out.bond_payoff = 1.0;
        return out;
    }

    std::mt19937_64 gen(path_seed(sim.seed, path_index));
    std::exponential_distribution<double> exp1(1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double E = exp1(gen);

    const auto controls = [&](double y, double& u, double& v) {
        u = fb.u(y);
        v = fb.v(y);
        if (pert && y >= pert->from && y <= pert->to) {
            if (pert->control == Perturbation::Control::U)
                u = std::clamp(u + pert->delta, 0.0, 1.0 - kControlMargin);
            else
                v = std::clamp(v + pert->delta, 0.0, prm.v_max * (1.0 - kControlMargin));
        }
    };

    double t = 0.0;
    double D = 0.0;       // integral of (r + lambda + v)
    double Lambda = 0.0;  // integrated hazard
    double cost = 0.0;
    double bond = 0.0;
    double rho_x = rho(x);
    const std::size_t max_steps = static_cast<std::size_t>(std::ceil(T / dt));

    for (std::size_t step = 0; step < max_steps; ++step) {
        double u, v;
        controls(x, u, v);
        const double p = fb.p(x);
        const double running = (u > 0.0 ? costs.payment_cost(u) : 0.0) +
                               (v > 0.0 ? costs.devaluation_cost(v) : 0.0);
        const double a = lr + v;
        const double drift = ((lr / p) - prm.lambda + prm.sigma * prm.sigma - prm.mu - v) * x - u / p;
        const double x_new_raw = x + drift * dt - prm.sigma * x * sqdt * normal(gen);
        const double x_new = std::max(x_new_raw, 0.0);
        const double rho_new = rho(std::min(x_new, xs));
        const double dLambda = 0.5 * dt * (rho_x + rho_new);

        // fraction of the step at which an absorbing event occurs, if any
        double frac = 1.0;
        PathEnd cause = PathEnd::Truncated;
        if (Lambda + dLambda >= E) {
            frac = dLambda > 0.0 ? (E - Lambda) / dLambda : 0.0;
            cause = PathEnd::Hazard;
        }
        if (x_new >= xs) {
            const double f_thr = (xs - x) / (x_new - x);
            if (cause != PathEnd::Hazard || f_thr < frac) {
                frac = f_thr;
                cause = PathEnd::Threshold;
            }
        } else if (x_new_raw <= 0.0) {
            const double f_zero = x / (x - x_new_raw);
            if (cause != PathEnd::Hazard || f_zero < frac) {
                frac = f_zero;
                cause = PathEnd::Repaid;
            }
        }
        const double h = frac * dt;
        cost += running * std::exp(-prm.r * t) * discount_integral(prm.r, h);
        bond += lr * std::exp(-D) * discount_integral(a, h);
        if (cause != PathEnd::Truncated) {
            const double tau = t + h;
            const double x_event =
                cause == PathEnd::Repaid ? 0.0 : std::min(x + frac * (x_new - x), xs);
            const double D_event = D + a * h;
            if (cause == PathEnd::Repaid) {
                bond += std::exp(-D_event);
            } else {
                const double salvage = cause == PathEnd::Threshold || sim.salvage_at_threshold
                                           ? model.salvage.rate(xs)
                                           : model.salvage.rate(x_event);
                cost += std::exp(-prm.r * tau) * B;
                bond += std::exp(-D_event) * salvage;
            }
            out.bankruptcy_time = tau;
            out.cause = cause;
            out.discounted_cost = cost;
            out.bond_payoff = bond;
            out.final_x = x_event;
            return out;
        }
        D += a * dt;
        Lambda += dLambda;
        t += dt;
        x = x_new;
        rho_x = rho_new;
    }
    // Truncated: the bond continues at the PDE price, the cost tail is dropped
    // and covered by truncation_bias_bound.
    bond += std::exp(-D) * fb.p(x);
    out.bankruptcy_time = t;
    out.cause = PathEnd::Truncated;
    out.discounted_cost = cost;
    out.bond_payoff = bond;
    out.final_x = x;
    return out;
}

McResult estimate(const Feedback& fb, const Model& model, const SimConfig& sim) {
    sim.validate();
    const std::size_t n = sim.n_paths;
    std::vector<PathOutcome> paths(n);
    parallel_for(n, sim.threads, [&](std::size_t i) { paths[i] = simulate_path(fb, model, sim, i); });

    McResult res;
    res.running_cost_bound = running_cost_bound(fb, model.costs);
    res.horizon = resolved_horizon(fb, model, sim);
    std::vector<double> cost(n), bond(n);
    for (std::size_t i = 0; i < n; ++i) {
        cost[i] = paths[i].discounted_cost;
        bond[i] = paths[i].bond_payoff;
        switch (paths[i].cause) {
            case PathEnd::Hazard: ++res.hazard_count; break;
            case PathEnd::Threshold: ++res.threshold_count; break;
            case PathEnd::Repaid: ++res.repaid_count; break;
            case PathEnd::Truncated: ++res.truncated_count; break;
        }
    }
    const ModelParams& prm = model.params;
    res.value = summarize(cost, std::exp(-prm.r * res.horizon) *
                                    (res.running_cost_bound / prm.r + prm.bankruptcy_cost));
    res.bond = summarize(bond, std::exp(-(prm.r + prm.lambda) * res.horizon));
    return res;
}

McEstimate estimate_value(const Feedback& fb, const Model& model, const SimConfig& sim) {
    return estimate(fb, model, sim).value;
}

McEstimate estimate_bond_price(const Feedback& fb, const Model& model, const SimConfig& sim) {
    return estimate(fb, model, sim).bond;
}

DeviationResult deviation_test(const Feedback& fb, const Perturbation& pert, const Model& model,
                               const SimConfig& sim) {
    sim.validate();
    // Both arms share the horizon of the unperturbed feedback.
    SimConfig fixed = sim;
    fixed.horizon = resolved_horizon(fb, model, sim);
    const std::size_t n = sim.n_paths;
    std::vector<double> base(n), bumped(n), diff(n);
    parallel_for(n, sim.threads, [&](std::size_t i) {
        base[i] = simulate_path(fb, model, fixed, i).discounted_cost;
        bumped[i] = simulate_path(fb, model, fixed, i, &pert).discounted_cost;
        diff[i] = bumped[i] - base[i];
    });
    DeviationResult res;
    res.base_cost = mean_of(base);
    res.perturbed_cost = mean_of(bumped);
    res.delta_cost = mean_of(diff);
    res.standard_error = standard_error_of(diff, res.delta_cost);
    res.ci_low = res.delta_cost - 3.0 * res.standard_error;
    res.ci_high = res.delta_cost + 3.0 * res.standard_error;
    return res;
}

std::vector<double> bankruptcy_times(const Feedback& fb, const Model& model, const SimConfig& sim) {
    sim.validate();
    std::vector<double> times(sim.n_paths);
    parallel_for(sim.n_paths, sim.threads,
                 [&](std::size_t i) { times[i] = simulate_path(fb, model, sim, i).bankruptcy_time; });
    return times;
}

KsResult ks_test_exponential(std::vector<double> samples, double rate) {
    if (samples.empty()) throw std::invalid_argument("KS test needs samples");
    if (!(rate > 0.0)) throw std::invalid_argument("KS test needs a positive rate");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = -std::expm1(-rate * samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    KsResult res;
    res.statistic = d;
    const double sn = std::sqrt(n);
    const double lam = (sn + 0.12 + 0.11 / sn) * d;
    // Q(lam) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lam^2)
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lam * lam);
        q += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    res.p_value = lam < 0.2 ? 1.0 : std::clamp(q, 0.0, 1.0);
    return res;
}

}  // namespace sovdebt
