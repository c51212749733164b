#include "sovdebt/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace sovdebt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kValidationGrid = 10000;

std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// CostSpec

CostSpec CostSpec::barrier(double alpha_L, double alpha_c, double v_max) {
    if (alpha_L < 0.0 || alpha_c < 0.0)
        throw std::invalid_argument("marginal costs at zero must be non-negative");
    if (v_max < 0.0) throw std::invalid_argument("v_max must be non-negative");
    CostSpec spec;
    spec.family_ = Family::Barrier;
    spec.alpha_L_ = alpha_L;
    spec.alpha_c_ = alpha_c;
    spec.v_max_ = v_max;
    // L'' >= 2 on [0,1); c'' = 2 v_max^2/(v_max - v)^3 >= 2/v_max.
    spec.delta0_ = v_max > 0.0 ? std::min(2.0, 2.0 / v_max) : 2.0;
    return spec;
}

CostSpec CostSpec::custom(Triple payment, Triple devaluation, double v_max, double curvature_floor) {
    if (!payment.value || !payment.derivative || !payment.derivative_inverse)
        throw std::invalid_argument("custom payment cost needs value, derivative and inverse");
    if (v_max > 0.0 &&
        (!devaluation.value || !devaluation.derivative || !devaluation.derivative_inverse))
        throw std::invalid_argument("custom devaluation cost needs value, derivative and inverse");
    CostSpec spec;
    spec.family_ = Family::Custom;
    spec.payment_ = std::move(payment);
    spec.devaluation_ = std::move(devaluation);
    spec.v_max_ = v_max;
    spec.delta0_ = curvature_floor;
    spec.alpha_L_ = spec.payment_.derivative(0.0);
    spec.alpha_c_ = v_max > 0.0 ? spec.devaluation_.derivative(0.0) : 0.0;
    return spec;
}

double CostSpec::payment_cost(double u) const {
    if (!(u >= 0.0 && u < 1.0)) throw DomainError("payment fraction outside [0,1): " + fmt_num(u));
    if (family_ == Family::Custom) return payment_.value(u);
    return alpha_L_ * u + u * u / (1.0 - u);
}

double CostSpec::payment_marginal(double u) const {
    if (!(u >= 0.0 && u < 1.0)) throw DomainError("payment fraction outside [0,1): " + fmt_num(u));
    if (family_ == Family::Custom) return payment_.derivative(u);
    const double w = 1.0 - u;
    return alpha_L_ + 1.0 / (w * w) - 1.0;
}

double CostSpec::payment_marginal_inverse(double s) const {
    if (!(s > alpha_L_))
        throw DomainError("marginal payment cost inverse needs s > L'(0), got " + fmt_num(s));
    if (family_ == Family::Custom) return payment_.derivative_inverse(s);
    return 1.0 - 1.0 / std::sqrt(s - alpha_L_ + 1.0);
}

double CostSpec::devaluation_cost(double v) const {
    if (!devaluation_enabled()) throw DomainError("devaluation disabled (v_max = 0)");
    if (!(v >= 0.0 && v < v_max_))
        throw DomainError("devaluation rate outside [0,v_max): " + fmt_num(v));
    if (family_ == Family::Custom) return devaluation_.value(v);
    return alpha_c_ * v + v * v / (v_max_ - v);
}

double CostSpec::devaluation_marginal(double v) const {
    if (!devaluation_enabled()) throw DomainError("devaluation disabled (v_max = 0)");
    if (!(v >= 0.0 && v < v_max_))
        throw DomainError("devaluation rate outside [0,v_max): " + fmt_num(v));
    if (family_ == Family::Custom) return devaluation_.derivative(v);
    const double w = v_max_ - v;
    return alpha_c_ + v_max_ * v_max_ / (w * w) - 1.0;
}

double CostSpec::devaluation_marginal_inverse(double s) const {
    if (!devaluation_enabled()) throw DomainError("devaluation disabled (v_max = 0)");
    if (!(s > alpha_c_))
        throw DomainError("marginal devaluation cost inverse needs s > c'(0), got " + fmt_num(s));
    if (family_ == Family::Custom) return devaluation_.derivative_inverse(s);
    return v_max_ * (1.0 - 1.0 / std::sqrt(s - alpha_c_ + 1.0));
}

// ---------------------------------------------------------------------------
// RiskSpec

RiskSpec RiskSpec::power(double kappa, double q, double x_star) {
    if (!(x_star > 0.0)) throw std::invalid_argument("x_star must be positive");
    RiskSpec spec;
    spec.family_ = Family::Power;
    spec.kappa_ = kappa;
    spec.q_ = q;
    spec.x_star_ = x_star;
    return spec;
}

RiskSpec RiskSpec::custom(std::function<double(double)> rate, double x_star) {
    if (!rate) throw std::invalid_argument("custom hazard needs an evaluator");
    if (!(x_star > 0.0)) throw std::invalid_argument("x_star must be positive");
    RiskSpec spec;
    spec.family_ = Family::Custom;
    spec.custom_ = std::move(rate);
    spec.x_star_ = x_star;
    return spec;
}

double RiskSpec::rate(double x) const {
    if (x < 0.0) throw DomainError("hazard evaluated at negative ratio " + fmt_num(x));
    if (x >= x_star_) return kInf;
    if (family_ == Family::Custom) return custom_(x);
    return kappa_ * x * std::pow(x_star_ - x, -q_);
}

double RiskSpec::inverse(double level) const {
    double lo = 0.0;
    double hi = x_star_;
    if (rate(lo) >= level) return lo;
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (rate(mid) < level)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::optional<bool> RiskSpec::integrable_over_x() const {
    if (family_ == Family::Power) return q_ < 1.0;
    return std::nullopt;
}

bool RiskSpec::fast_blowup() const {
    if (family_ == Family::Power) return q_ > 2.0;
    double prev = 0.0;
    for (int k = 2; k <= 8; ++k) {
        const double gap = x_star_ * std::pow(10.0, -k);
        const double g = rate(x_star_ - gap) * gap * gap;
        if (!std::isfinite(g)) return true;
        if (k > 2 && !(g >= 10.0 * prev)) return false;
        prev = g;
    }
    return true;
}

// ---------------------------------------------------------------------------
// SalvageSpec

SalvageSpec SalvageSpec::linear(double m, double x_star) {
    if (!(x_star > 0.0)) throw std::invalid_argument("x_star must be positive");
    SalvageSpec spec;
    spec.family_ = Family::Linear;
    spec.m_ = m;
    spec.x_star_ = x_star;
    return spec;
}

SalvageSpec SalvageSpec::custom(std::function<double(double)> rate, double x_star) {
    if (!rate) throw std::invalid_argument("custom salvage needs an evaluator");
    if (!(x_star > 0.0)) throw std::invalid_argument("x_star must be positive");
    SalvageSpec spec;
    spec.family_ = Family::Custom;
    spec.custom_ = std::move(rate);
    spec.x_star_ = x_star;
    return spec;
}

double SalvageSpec::rate(double x) const {
    if (family_ == Family::Custom) return custom_(x);
    return 1.0 - m_ * x / x_star_;
}

double SalvageSpec::lipschitz_near_zero() const {
    const double half = 0.5 * x_star_;
    const double h = half / kValidationGrid;
    const double theta0 = rate(0.0);
    double bound = 0.0;
    double prev = theta0;
    for (int i = 1; i <= kValidationGrid; ++i) {
        const double x = i * h;
        const double th = rate(x);
        bound = std::max(bound, std::abs(th - prev) / h);
        bound = std::max(bound, (1.0 - th) / x);
        prev = th;
    }
    return bound;
}

// ---------------------------------------------------------------------------
// RegularizedRisk

RegularizedRisk::RegularizedRisk(const RiskSpec& risk, double epsilon)
    : risk_(risk), epsilon_(epsilon), x_eps_(0.0) {
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw std::invalid_argument("regularization level must lie in (0, 1/2)");
    x_eps_ = risk_.inverse(1.0 / epsilon_);
}

double RegularizedRisk::rate(double x) const {
    const double cap = 1.0 / epsilon_;
    if (x >= x_eps_) return cap;
    return std::min(risk_.rate(x), cap);
}

RegularizedRisk regularize_rho(const RiskSpec& risk, double epsilon) {
    return RegularizedRisk(risk, epsilon);
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck* ValidationReport::first_failure() const {
    for (const auto& c : checks)
        if (!c.passed) return &c;
    return nullptr;
}

namespace {

void add_sign_check(ValidationReport& rep, const std::string& name, bool ok, double value) {
    rep.checks.push_back({name, ok, std::nullopt, ok ? "" : "value " + fmt_num(value)});
}

// Calls f and turns DomainError or non-finite output into nullopt.
template <typename F>
std::optional<double> safe_eval(F&& f, double x) {
    try {
        const double y = f(x);
        if (std::isnan(y)) return std::nullopt;
        return y;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

AssumptionCheck check_salvage(const SalvageSpec& salvage, double x_star) {
    AssumptionCheck c{"A1 salvage non-increasing with values in (0,1]", true, std::nullopt, ""};
    const double h = x_star / kValidationGrid;
    double prev = 0.0;
    for (int i = 0; i <= kValidationGrid; ++i) {
        const double x = i == kValidationGrid ? x_star : i * h;
        const auto th = safe_eval([&](double y) { return salvage.rate(y); }, x);
        if (th && i > 0 && *th > prev) {
            c.passed = false;
            c.witness = x;
            c.detail = "theta increases";
            return c;
        }
        if (!th || !(*th > 0.0) || *th > 1.0) {
            c.passed = false;
            c.witness = x;
            c.detail = "theta outside (0,1]";
            return c;
        }
        prev = *th;
    }
    return c;
}

std::vector<AssumptionCheck> check_risk(const RiskSpec& risk, double x_star) {
    std::vector<AssumptionCheck> out;

    AssumptionCheck zero{"A2 rho(0) = 0", true, std::nullopt, ""};
    const auto r0 = safe_eval([&](double y) { return risk.rate(y); }, 0.0);
    if (!r0 || std::abs(*r0) > 1e-12) {
        zero.passed = false;
        zero.witness = 0.0;
        zero.detail = r0 ? "rho(0) = " + fmt_num(*r0) : "rho(0) undefined";
    }
    out.push_back(zero);

    AssumptionCheck mono{"A2 rho non-negative and non-decreasing on [0,x*)", true, std::nullopt, ""};
    const double top = x_star * (1.0 - 1e-6);
    const double h = top / kValidationGrid;
    double prev = 0.0;
    for (int i = 0; i <= kValidationGrid; ++i) {
        const double x = i * h;
        const auto rv = safe_eval([&](double y) { return risk.rate(y); }, x);
        if (!rv || *rv < 0.0 || (i > 0 && *rv < prev)) {
            mono.passed = false;
            mono.witness = x;
            mono.detail = !rv ? "rho undefined" : (*rv < 0.0 ? "rho negative" : "rho decreases");
            break;
        }
        prev = *rv;
    }
    out.push_back(mono);

    AssumptionCheck blow{"A2 rho blows up at x*", true, std::nullopt, ""};
    if (risk.family() == RiskSpec::Family::Power) {
        if (!(risk.kappa() > 0.0 && risk.q() > 0.0)) {
            blow.passed = false;
            blow.detail = "power family needs kappa > 0 and q > 0";
        }
    } else {
        const auto near = safe_eval([&](double y) { return risk.rate(y); }, x_star * (1.0 - 1e-12));
        const auto mid = safe_eval([&](double y) { return risk.rate(y); }, 0.5 * x_star);
        if (!near || !mid || !(*near > 1e3 * std::max(1.0, *mid))) {
            blow.passed = false;
            blow.witness = x_star;
            blow.detail = "no blow-up detected near x*";
        }
    }
    out.push_back(blow);
    return out;
}

AssumptionCheck check_convex_cost(const std::string& name, double upper, double delta0,
                                  const std::function<double(double)>& value,
                                  const std::function<double(double)>& marginal) {
    AssumptionCheck c{name, true, std::nullopt, ""};
    const auto v0 = safe_eval(value, 0.0);
    if (!v0 || std::abs(*v0) > 1e-12) {
        c.passed = false;
        c.witness = 0.0;
        c.detail = "cost at zero is not zero";
        return c;
    }
    const double top = upper * 0.999;
    const double h = top / kValidationGrid;
    double prev = 0.0;
    for (int i = 0; i <= kValidationGrid; ++i) {
        const double x = i * h;
        const auto d = safe_eval(marginal, x);
        if (!d || *d < 0.0 || (i > 0 && !(*d > 0.0))) {
            c.passed = false;
            c.witness = x;
            c.detail = "marginal cost not positive";
            return c;
        }
        if (i > 0 && (*d - prev) / h < delta0 * (1.0 - 1e-6)) {
            c.passed = false;
            c.witness = x;
            c.detail = "curvature below delta0 = " + fmt_num(delta0);
            return c;
        }
        prev = *d;
    }
    const auto edge = safe_eval(value, upper * (1.0 - 1e-9));
    if (!edge || !(*edge > 1e6 * std::max(upper, 1e-3))) {
        c.passed = false;
        c.witness = upper;
        c.detail = "cost does not blow up at the end of its domain";
    }
    return c;
}

}  // namespace

ValidationReport validate_params(const ModelParams& params, const CostSpec& costs,
                                 const RiskSpec& risk, const SalvageSpec& salvage) {
    ValidationReport rep;
    add_sign_check(rep, "sigma > 0", params.sigma > 0.0, params.sigma);
    add_sign_check(rep, "x_star > 0", params.x_star > 0.0, params.x_star);
    add_sign_check(rep, "r > 0", params.r > 0.0, params.r);
    add_sign_check(rep, "lambda >= 0", params.lambda >= 0.0, params.lambda);
    add_sign_check(rep, "v_max >= 0", params.v_max >= 0.0, params.v_max);
    add_sign_check(rep, "B >= 0", params.bankruptcy_cost >= 0.0, params.bankruptcy_cost);
    add_sign_check(rep, "costs v_max matches model", costs.v_max() == params.v_max, costs.v_max());
    add_sign_check(rep, "risk x_star matches model", risk.x_star() == params.x_star, risk.x_star());
    add_sign_check(rep, "salvage x_star matches model", salvage.x_star() == params.x_star,
                   salvage.x_star());
    if (!(params.x_star > 0.0)) return rep;

    rep.checks.push_back(check_salvage(salvage, params.x_star));
    for (auto& c : check_risk(risk, params.x_star)) rep.checks.push_back(std::move(c));

    rep.checks.push_back(check_convex_cost(
        "A3 payment cost convex with L(0)=0 and blow-up at 1", 1.0, costs.delta0(),
        [&](double u) { return costs.payment_cost(u); },
        [&](double u) { return costs.payment_marginal(u); }));
    if (costs.devaluation_enabled()) {
        rep.checks.push_back(check_convex_cost(
            "A3 devaluation cost convex with c(0)=0 and blow-up at v_max", costs.v_max(),
            costs.delta0(), [&](double v) { return costs.devaluation_cost(v); },
            [&](double v) { return costs.devaluation_marginal(v); }));
    }
    return rep;
}

}  // namespace sovdebt
