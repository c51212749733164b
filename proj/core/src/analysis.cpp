#include "sovdebt/analysis.hpp"

#include "sovdebt/hamiltonian.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sovdebt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kBetaStarCap = 1e12;

double beta_constant(const ModelParams& prm, double theta_min) {
    return (prm.lambda + prm.r) / theta_min + 0.5 * prm.sigma * prm.sigma;
}

// max_{0<s<=t} rho(s) ln(t/s): coarse scan, then Brent on the bracketing cells.
double beta_max_term(const RiskSpec& risk, double t, std::size_t scan_points) {
    if (t <= 0.0) return 0.0;
    const auto f = [&](double s) { return s > 0.0 ? risk.rate(s) * std::log(t / s) : 0.0; };
    const std::size_t n = std::max<std::size_t>(scan_points, 3);
    const double ds = t / static_cast<double>(n);
    std::size_t best = n;
    double best_val = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        const double v = f(static_cast<double>(j) * ds);
        if (v > best_val) {
            best_val = v;
            best = j;
        }
    }
    if (best == n) return 0.0;
    const double lo = static_cast<double>(best - 1) * ds;
    const double hi = static_cast<double>(best + 1) * ds;
    const auto res = boost::math::tools::brent_find_minima(
        [&](double s) { return -f(std::clamp(s, lo, hi)); }, lo, hi, 28);
    return std::max(best_val, -res.second);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

BoundsReport compute_constants(const Model& model) {
    const ModelParams& prm = model.params;
    BoundsReport out;
    const BoundConstants bc = bound_constants(prm, model.salvage);
    out.theta_min = bc.theta_min;
    out.K1 = bc.K1;
    const double sig2 = prm.sigma * prm.sigma;
    const double lr = prm.lambda + prm.r;
    const double B = prm.bankruptcy_cost;
    const double xs = prm.x_star;

    out.x1 = std::min(1.0 / (6.0 * (lr + sig2)), 0.5 * xs);
    out.M1 = 8.0 * (model.costs.payment_cost(0.5) + model.risk.rate(out.x1) * B);

    const double K1 = out.K1;
    const double x1sq = out.x1 * out.x1;
    const double term2 = 1.5 * K1 * xs / (sig2 * x1sq) +
                         std::log(4.0 * B / xs + (B / K1) * model.risk.rate(0.75 * xs));
    const double term3 = 2.0 * K1 * xs / (sig2 * x1sq) + std::log(4.0 * B / xs + prm.r * B / K1);
    out.log_M_star = std::max({std::log(out.M1), term2, term3});

    out.gamma = std::min(1.0, lr / (lr / out.theta_min + sig2));
    out.salvage_lipschitz = model.salvage.lipschitz_near_zero();

    const double alpha_c = model.costs.alpha_c();
    out.log_v_dead_zone = std::log(alpha_c) - out.log_M_star;
    out.v_dead_zone = std::exp(out.log_v_dead_zone);

    const double salvage_term = out.salvage_lipschitz > 0.0
                                    ? std::log((1.0 - out.theta_min) / out.salvage_lipschitz)
                                    : kInf;
    out.log_x_bar0 = std::min({out.log_v_dead_zone, std::log(0.5 * xs), salvage_term});
    out.x_bar0 = std::exp(out.log_x_bar0);
    out.log_k = std::log(1.0 - out.theta_min) - out.gamma * out.log_x_bar0;
    out.k = std::exp(out.log_k);

    out.beta_star = compute_beta_star(model);
    out.C1 = prm.lambda + prm.mu + prm.v_max;
    return out;
}

double compute_beta(const Model& model, double theta_min, double t, std::size_t scan_points) {
    if (!(t >= 0.0 && t < model.params.x_star))
        throw DomainError("beta needs t in [0, x*), got " + fmt(t));
    return beta_max_term(model.risk, t, scan_points) + beta_constant(model.params, theta_min);
}

// int_0^{x*} rho(t)/t dt for a custom rho, whose singularity is unknown.
// Adaptive Gauss-Kronrod on [0, x*/2] and on one piece per decade of the gap
// to x*, down to a gap of 5e-14 x*. The tail beyond is extrapolated from the
// last two decade increments; if they do not shrink by at least 10% per
// decade the integral is reported divergent.
namespace {

std::optional<double> custom_tail_integral(const RiskSpec& risk, double xs) {
    const auto f = [&](double t) {
        const double v = risk.rate(t) / t;
        return std::isfinite(v) ? v : 0.0;
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double total = GK::integrate(f, 0.0, 0.5 * xs, 15, 1e-12);
    double prev = kNaN, last = kNaN;
    double a = 0.5 * xs;
    for (int k = 1; k <= 13; ++k) {
        const double b = xs * (1.0 - 0.5 * std::pow(10.0, -k));
        const double piece = GK::integrate(f, a, b, 15, 1e-12);
        if (!std::isfinite(piece)) return std::nullopt;
        total += piece;
        prev = last;
        last = piece;
        a = b;
    }
    if (last <= 0.0) return total;
    const double ratio = last / prev;
    if (!(ratio < 0.9)) return std::nullopt;
    return total + last * ratio / (1.0 - ratio);
}

}  // namespace

std::optional<double> compute_beta_star(const Model& model) {
    const RiskSpec& risk = model.risk;
    const double xs = model.params.x_star;
    if (auto integrable = risk.integrable_over_x(); integrable && !*integrable) return std::nullopt;

    boost::math::quadrature::tanh_sinh<double> integrator;
    double integral = kNaN;
    try {
        if (risk.family() == RiskSpec::Family::Power) {
            // rho(t)/t = kappa (x* - t)^{-q}; the complement argument avoids
            // cancellation at the singular end.
            const double kappa = risk.kappa();
            const double q = risk.q();
            integral = integrator.integrate(
                [&](double t, double tc) {
                    const double gap = t > 0.5 * xs ? tc : xs - t;
                    return kappa * std::pow(gap, -q);
                },
                0.0, xs, 1e-10);
        } else {
            const auto tail = custom_tail_integral(risk, xs);
            if (!tail) return std::nullopt;
            integral = *tail;
        }
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (!std::isfinite(integral) || integral > kBetaStarCap) return std::nullopt;
    const double tm = theta_min(model.params, model.salvage);
    return integral + beta_constant(model.params, tm);
}

// ---------------------------------------------------------------------------
// V1

SupersolutionV1::SupersolutionV1(const Model& model)
    : model_(model), theta_min_(theta_min(model.params, model.salvage)) {
    const double xs = model.params.x_star;
    constexpr int kUniform = 800;
    constexpr int kTail = 400;
    for (int j = 0; j < kUniform; ++j) t_.push_back(xs * j / kUniform);
    for (int k = 0; k <= kTail; ++k) t_.push_back(xs * (1.0 - std::pow(10.0, -(1.0 + 11.0 * k / kTail))));
    std::sort(t_.begin(), t_.end());
    t_.erase(std::unique(t_.begin(), t_.end()), t_.end());
    beta_.reserve(t_.size());
    double running = 0.0;
    for (double t : t_) {
        // enforce monotonicity against the scan's last-digit noise
        running = std::max(running, compute_beta(model_, theta_min_, t));
        beta_.push_back(running);
    }
}

double SupersolutionV1::beta(double t) const {
    if (t <= t_.front()) return beta_.front();
    if (t >= t_.back()) return compute_beta(model_, theta_min_, t);
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - t_.begin());
    const double w = (t - t_[i - 1]) / (t_[i] - t_[i - 1]);
    return (1.0 - w) * beta_[i - 1] + w * beta_[i];
}

double SupersolutionV1::operator()(double x) const {
    const double xs = model_.params.x_star;
    const double B = model_.params.bankruptcy_cost;
    const double r = model_.params.r;
    if (x <= 0.0) return 0.0;
    if (x >= xs) return B;

    const double t_max = t_.back();
    if (x >= t_max) return B;
    const auto ratio = [&](double t, double b) { return b / (r * std::log(t / x) + b); };

    constexpr int kScan = 1000;
    const double lx = std::log(x);
    const double lspan = std::log(t_max) - lx;
    std::vector<double> cand;
    cand.reserve(kScan + t_.size());
    for (int k = 0; k <= kScan; ++k) cand.push_back(std::exp(lx + lspan * k / kScan));
    cand.front() = x;
    cand.back() = t_max;
    for (double t : t_)
        if (t > x) cand.push_back(t);
    std::sort(cand.begin(), cand.end());

    std::size_t best = 0;
    double best_val = 1.0;
    for (std::size_t k = 0; k < cand.size(); ++k) {
        const double v = ratio(cand[k], beta(cand[k]));
        if (v < best_val) {
            best_val = v;
            best = k;
        }
    }
    // Refine with the exact beta on the bracketing cells.
    const double lo = cand[best == 0 ? 0 : best - 1];
    const double hi = cand[std::min(best + 1, cand.size() - 1)];
    if (hi > lo) {
        const auto exact = [&](double t) {
            t = std::clamp(t, lo, hi);
            return ratio(t, compute_beta(model_, theta_min_, t, 1000));
        };
        const auto res = boost::math::tools::brent_find_minima(exact, lo, hi, 26);
        best_val = std::min(best_val, res.second);
    }
    return B * std::clamp(best_val, 0.0, 1.0);
}

double supersolution_V1(const Model& model, double x) { return SupersolutionV1(model)(x); }

// ---------------------------------------------------------------------------
// V2 and x_diamond

XDiamond find_x_diamond(const Model& model, std::size_t scan_points) {
    const ModelParams& prm = model.params;
    const double xs = prm.x_star;
    const double lr = prm.r + prm.lambda;
    XDiamond out;
    if (xs < (2.0 / lr) * (1.0 - 1e-12)) {
        out.reason = "x* = " + fmt(xs) + " < 2/(r+lambda) = " + fmt(2.0 / lr);
        return out;
    }
    if (!model.risk.fast_blowup()) {
        out.reason = "rho(x)(x*-x)^2 does not blow up at x*";
        return out;
    }
    const double C1 = prm.lambda + prm.mu + prm.v_max;
    const double sig2 = prm.sigma * prm.sigma;
    const auto g = [&](double x) {
        const double rho = model.risk.rate(x);
        return (2.0 / (std::log(2.0) * xs)) * (rho * std::log(xs / x) * (xs - x) - (C1 + sig2) * xs) -
               prm.r;
    };
    const std::size_t n = std::max<std::size_t>(scan_points, 10);

    const auto scan = [&](auto node) -> std::optional<double> {
        std::optional<double> found;
        for (std::size_t j = n; j-- > 0;) {
            const double x = node(j);
            if (!(g(x) >= 0.0)) break;
            found = x;
        }
        return found;
    };

    out.value = scan([&](std::size_t j) { return 0.5 * xs + 0.5 * xs * static_cast<double>(j) / n; });
    if (!out.value) {
        // geometric clustering toward x*, down to gaps of 1e-8 x*/2
        out.value = scan([&](std::size_t j) {
            return xs - 0.5 * xs * std::pow(10.0, -8.0 * static_cast<double>(j) / n);
        });
    }
    if (!out.value) out.reason = "tail inequality fails on the scanned grid";
    return out;
}

double subsolution_V2(const ModelParams& prm, double x_diamond, double x) {
    const double xs = prm.x_star;
    if (!(x_diamond > 0.0 && x_diamond < xs)) throw DomainError("x_diamond outside (0, x*)");
    if (!(x >= x_diamond && x <= xs)) throw DomainError("V2 needs x in [x_diamond, x*], got " + fmt(x));
    const double num = std::log(xs / x) * (1.0 - x / xs);
    const double den = std::log(xs / x_diamond) * (xs - x_diamond) * (1.0 / xs);
    return prm.bankruptcy_cost * (1.0 - num / den);
}

double subsolution_p_minus(const BoundsReport& b, double x) {
    if (!(x >= 0.0 && x <= b.x_bar0))
        throw DomainError("p- needs x in [0, x_bar0 = " + fmt(b.x_bar0) + "], got " + fmt(x));
    if (x == 0.0) return 1.0;
    // k x^gamma = (1 - theta_min)(x/x_bar0)^gamma
    return 1.0 - (1.0 - b.theta_min) * std::exp(b.gamma * (std::log(x) - b.log_x_bar0));
}

// ---------------------------------------------------------------------------
// Classification

const char* to_string(Regime regime) {
    switch (regime) {
        case Regime::DevaluePay: return "DevaluePay";
        case Regime::NoAction: return "NoAction";
        case Regime::Indeterminate: return "Indeterminate";
    }
    return "?";
}

RegimeClassification classify_regime(const Model& model) {
    const ModelParams& prm = model.params;
    RegimeClassification out;
    out.beta_star = compute_beta_star(model);

    const double Br = prm.bankruptcy_cost * prm.r;
    const double inv_c = model.costs.alpha_c() > 0.0 ? 1.0 / model.costs.alpha_c() : kInf;
    const double inv_L =
        model.costs.alpha_L() > 0.0 ? 1.0 / (model.costs.alpha_L() * prm.x_star) : kInf;
    out.devalue_threshold = Br > 0.0 ? Br * std::min(inv_c, inv_L) : 0.0;
    out.devalue_test = model.costs.devaluation_enabled() && out.beta_star &&
                       *out.beta_star < out.devalue_threshold;

    out.x_star = prm.x_star;
    out.x_star_threshold = 2.0 / (prm.r + prm.lambda);
    out.fast_blowup = model.risk.fast_blowup();
    out.no_action_test =
        prm.x_star >= out.x_star_threshold * (1.0 - 1e-12) && out.fast_blowup;

    if (out.devalue_test)
        out.label = Regime::DevaluePay;
    else if (out.no_action_test)
        out.label = Regime::NoAction;
    return out;
}

// ---------------------------------------------------------------------------
// Verification

const char* to_string(CheckStatus status) {
    switch (status) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        case CheckStatus::NotApplicable: return "n/a";
        case CheckStatus::Vacuous: return "vacuous";
    }
    return "?";
}

bool VerificationReport::passed() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const auto& c) { return c.status == CheckStatus::Fail; });
}

const VerificationCheck* VerificationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

// Tracks the largest violation and where it occurred.
struct Worst {
    double value = 0.0;
    std::optional<double> at;

    void update(double violation, double x) {
        if (violation > value || (!at && violation >= value)) {
            value = violation;
            at = x;
        }
    }
};

VerificationCheck make_check(std::string name, const Worst& w, double tol, std::string detail) {
    VerificationCheck c;
    c.name = std::move(name);
    c.worst_violation = w.value;
    c.witness = w.at;
    c.status = w.value <= tol ? CheckStatus::Pass : CheckStatus::Fail;
    c.detail = std::move(detail);
    return c;
}

VerificationCheck not_applicable(std::string name, std::string detail) {
    VerificationCheck c;
    c.name = std::move(name);
    c.status = CheckStatus::NotApplicable;
    c.detail = std::move(detail);
    return c;
}

}  // namespace

VerificationReport verify_solution(const Solution& sol, const Model& model, const VerifyOptions& opt) {
    const ModelParams& prm = model.params;
    const std::vector<double>& x = sol.grid.nodes;
    const std::size_t n = x.size();
    if (n < 3 || sol.V.size() != n || sol.p.size() != n || sol.u_star.size() != n ||
        sol.v_star.size() != n)
        throw std::invalid_argument("solution columns do not match the grid");
    const double B = prm.bankruptcy_cost;
    const double xs = prm.x_star;
    const BoundsReport bounds = compute_constants(model);
    VerificationReport report;

    {
        Worst w;
        const double theta_end = model.salvage.rate(xs);
        w.update(std::abs(sol.V.front()), x.front());
        w.update(std::abs(sol.p.front() - 1.0), x.front());
        w.update(std::abs(sol.V.back() - B), x.back());
        w.update(std::abs(sol.p.back() - theta_end), x.back());
        report.checks.push_back(make_check("boundary_values", w, 0.0,
                                           "V(0)=0, V(x*)=B, p(0)=1, p(x*)=theta(x*) exactly"));
    }
    {
        Worst w;
        for (std::size_t i = 0; i < n; ++i) w.update(std::max({0.0, -sol.V[i], sol.V[i] - B}), x[i]);
        report.checks.push_back(make_check("V_range", w, opt.range_tol * std::max(1.0, B),
                                           "0 <= V <= B"));
    }
    {
        Worst w;
        for (std::size_t i = 0; i < n; ++i)
            w.update(std::max({0.0, bounds.theta_min - sol.p[i], sol.p[i] - 1.0}), x[i]);
        report.checks.push_back(make_check("p_range", w, opt.range_tol,
                                           "theta_min <= p <= 1, theta_min = " + fmt(bounds.theta_min)));
    }
    {
        Worst w;
        for (std::size_t i = 0; i + 1 < n; ++i) w.update(std::max(sol.V[i] - sol.V[i + 1], 0.0), x[i]);
        report.checks.push_back(make_check("V_monotone", w, opt.monotone_tol * B,
                                           "forward differences of V non-negative"));
    }
    {
        const ResidualPair res = residual(sol, model);
        Worst w;
        for (std::size_t i = 0; i < n; ++i) {
            w.update(std::abs(res.V[i]), x[i]);
            w.update(std::abs(res.p[i]), x[i]);
        }
        report.checks.push_back(make_check("stationary_residual", w, opt.steady_state_tol,
                                           "max residual at eps = " + fmt(sol.epsilon)));
    }
    {
        const SupersolutionV1 V1(model);
        Worst w;
        for (std::size_t i = 1; i + 1 < n; ++i) w.update(std::max(sol.V[i] - V1(x[i]), 0.0), x[i]);
        report.checks.push_back(make_check("V_below_V1", w, opt.bound_tol * B, "V <= V1"));
    }
    {
        Worst w;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n && x[i] <= bounds.x_bar0; ++i, ++count)
            w.update(std::max(subsolution_p_minus(bounds, x[i]) - sol.p[i], 0.0), x[i]);
        auto c = make_check("p_above_p_minus", w, opt.bound_tol,
                            "p >= p- on [0, x_bar0], x_bar0 = " + fmt(bounds.x_bar0) + ", " +
                                std::to_string(count) + " nodes");
        // only x = 0 inside the interval: nothing beyond the boundary value is tested
        if (c.status == CheckStatus::Pass && count <= 1) c.status = CheckStatus::Vacuous;
        report.checks.push_back(std::move(c));
    }
    {
        const XDiamond xd = find_x_diamond(model);
        if (!xd.value) {
            report.checks.push_back(not_applicable("V_above_V2", xd.reason));
        } else {
            Worst w;
            for (std::size_t i = 0; i < n; ++i)
                if (x[i] >= *xd.value)
                    w.update(std::max(subsolution_V2(prm, *xd.value, x[i]) - sol.V[i], 0.0), x[i]);
            report.checks.push_back(make_check("V_above_V2", w, opt.bound_tol * B,
                                               "V >= V2 on [x_diamond, x*], x_diamond = " +
                                                   fmt(*xd.value)));
        }
    }
    {
        double max_dV = 0.0;
        for (double d : sol.dV) max_dV = std::max(max_dV, std::abs(d));
        const double zone = max_dV > 0.0 ? model.costs.alpha_c() / max_dV : kInf;
        Worst w;
        for (std::size_t i = 0; i < n && x[i] <= zone; ++i) w.update(std::max(sol.v_star[i], 0.0), x[i]);
        report.checks.push_back(make_check("dead_zone_empirical", w, opt.control_threshold,
                                           "v* = 0 on [0, c'(0)/max|V'|], bound = " + fmt(zone)));
    }
    {
        const double h = sol.grid.h;
        if (bounds.v_dead_zone < h) {
            VerificationCheck c;
            c.name = "dead_zone_certified";
            c.status = CheckStatus::Vacuous;
            c.detail = "log(c'(0)/M*) = " + fmt(bounds.log_v_dead_zone) + " below grid spacing";
            report.checks.push_back(std::move(c));
        } else {
            Worst w;
            for (std::size_t i = 0; i < n && x[i] <= bounds.v_dead_zone; ++i)
                w.update(std::max(sol.v_star[i], 0.0), x[i]);
            report.checks.push_back(make_check("dead_zone_certified", w, opt.control_threshold,
                                               "v* = 0 on [0, c'(0)/M*]"));
        }
    }
    {
        const RegimeClassification cls = classify_regime(model);
        if (cls.label == Regime::Indeterminate) {
            report.checks.push_back(not_applicable("near_threshold_regime", "regime indeterminate"));
        } else {
            const bool pay = cls.label == Regime::DevaluePay;
            Worst w;
            const double from = (1.0 - opt.near_threshold_fraction) * xs;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                if (x[i] < from) continue;
                for (double c : {sol.u_star[i], sol.v_star[i]}) {
                    // DevaluePay: shortfall below the threshold; NoAction: excess above zero
                    const double viol = pay ? std::max(opt.control_threshold - c, 0.0) : std::max(c, 0.0);
                    w.update(viol, x[i]);
                }
            }
            auto c = make_check("near_threshold_regime", w, pay ? 0.0 : opt.control_threshold,
                                std::string("controls near x* consistent with ") + to_string(cls.label));
            report.checks.push_back(std::move(c));
        }
    }
    return report;
}

BoundCurves sample_bound_curves(const Model& model, const BoundsReport& bounds, std::size_t n) {
    if (n < 2) throw std::invalid_argument("need at least two sample points");
    const ModelParams& prm = model.params;
    const double xs = prm.x_star;
    BoundCurves out;
    out.x_diamond = find_x_diamond(model);
    const SupersolutionV1 V1(model);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = i + 1 == n ? xs : xs * static_cast<double>(i) / (n - 1);
        out.x.push_back(x);
        out.beta.push_back(x < xs ? V1.beta(x) : kInf);
        out.V1.push_back(V1(x));
        out.V2.push_back(out.x_diamond.value && x >= *out.x_diamond.value
                             ? subsolution_V2(prm, *out.x_diamond.value, x)
                             : kNaN);
        out.p_minus.push_back(x <= bounds.x_bar0 ? subsolution_p_minus(bounds, x) : kNaN);
    }
    return out;
}

}  // namespace sovdebt
