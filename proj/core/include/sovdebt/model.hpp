#pragma once

/// @file model.hpp
/// @brief Model parameters and the parametric function families of the
/// sovereign debt model: payment cost L(u), devaluation cost c(v),
/// bankruptcy hazard rho(x) and salvage rate theta(x).

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sovdebt {

/// Thrown when a cost or hazard function is evaluated outside its domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Scalar economic constants.
struct ModelParams {
    double r = 0.05;               ///< interest rate paid on bonds
    double lambda = 0.2;           ///< principal repayment rate
    double mu = 0.02;              ///< mean income growth rate
    double sigma = 0.3;            ///< income volatility, > 0
    double bankruptcy_cost = 5.0;  ///< cost B of bankruptcy, >= 0
    double x_star = 1.5;           ///< mandatory bankruptcy threshold on debt-to-income
    double v_max = 0.5;            ///< maximal devaluation rate, >= 0
};

/// Payment cost L on [0,1) and devaluation cost c on [0,v_max).
///
/// The built-in barrier family is
///   L(u) = a_L u + u^2/(1-u),         L''(u) >= 2
///   c(v) = a_c v + v^2/(v_max - v),   c''(v) >= 2/v_max
/// whose marginal costs have closed-form inverses. A custom family supplies
/// the (value, derivative, derivative-inverse) triples directly.
class CostSpec {
public:
    struct Triple {
        std::function<double(double)> value;
        std::function<double(double)> derivative;
        std::function<double(double)> derivative_inverse;
    };

    enum class Family { Barrier, Custom };

    static CostSpec barrier(double alpha_L, double alpha_c, double v_max);
    /// `curvature_floor` is the delta0 lower bound on L'' and c'' the caller vouches for.
    static CostSpec custom(Triple payment, Triple devaluation, double v_max, double curvature_floor);

    Family family() const noexcept { return family_; }
    double alpha_L() const noexcept { return alpha_L_; }
    double alpha_c() const noexcept { return alpha_c_; }
    double v_max() const noexcept { return v_max_; }
    /// Uniform lower bound on L'' and c''.
    double delta0() const noexcept { return delta0_; }
    /// v_max == 0: devaluation is unavailable and c is never evaluated.
    bool devaluation_enabled() const noexcept { return v_max_ > 0.0; }

    double payment_cost(double u) const;
    double payment_marginal(double u) const;
    /// Inverse of L'; requires s > L'(0).
    double payment_marginal_inverse(double s) const;

    double devaluation_cost(double v) const;
    double devaluation_marginal(double v) const;
    /// Inverse of c'; requires s > c'(0).
    double devaluation_marginal_inverse(double s) const;

private:
    Family family_ = Family::Barrier;
    double alpha_L_ = 0.0;
    double alpha_c_ = 0.0;
    double v_max_ = 0.0;
    double delta0_ = 2.0;
    Triple payment_{};
    Triple devaluation_{};
};

/// Instantaneous bankruptcy risk rho on [0, x_star).
///
/// Built-in: rho(x) = kappa * x * (x_star - x)^(-q). The custom family only
/// needs an evaluator.
class RiskSpec {
public:
    enum class Family { Power, Custom };

    static RiskSpec power(double kappa, double q, double x_star);
    static RiskSpec custom(std::function<double(double)> rate, double x_star);

    Family family() const noexcept { return family_; }
    double kappa() const noexcept { return kappa_; }
    double q() const noexcept { return q_; }
    double x_star() const noexcept { return x_star_; }

    /// rho(x); +inf for x >= x_star.
    double rate(double x) const;

    /// x with rho(x) = level, by monotone bisection on [0, x_star).
    double inverse(double level) const;

    /// Whether int_0^{x*} rho(t)/t dt is finite, decided analytically for the
    /// built-in family (q < 1). Empty for custom families.
    std::optional<bool> integrable_over_x() const;

    /// Whether rho(x)(x*-x)^2 -> infinity as x -> x*. Analytic for the
    /// built-in family (q > 2); sampled at x* - 10^-k, k = 2..8 otherwise,
    /// requiring monotone growth by at least a factor 10 per decade.
    bool fast_blowup() const;

private:
    Family family_ = Family::Power;
    double kappa_ = 1.0;
    double q_ = 0.5;
    double x_star_ = 1.0;
    std::function<double(double)> custom_;
};

/// Salvage rate theta on [0, x_star]; built-in theta(x) = 1 - m x / x_star.
class SalvageSpec {
public:
    enum class Family { Linear, Custom };

    static SalvageSpec linear(double m, double x_star);
    static SalvageSpec custom(std::function<double(double)> rate, double x_star);

    Family family() const noexcept { return family_; }
    double m() const noexcept { return m_; }
    double x_star() const noexcept { return x_star_; }

    double rate(double x) const;

    /// Smallest M (estimated on a fine grid) with theta(x) >= 1 - M x on
    /// [0, x_star/2]; at least the largest finite-difference slope there.
    double lipschitz_near_zero() const;

private:
    Family family_ = Family::Linear;
    double m_ = 0.0;
    double x_star_ = 1.0;
    std::function<double(double)> custom_;
};

/// rho capped at 1/epsilon beyond the crossover x_eps = rho^{-1}(1/epsilon).
class RegularizedRisk {
public:
    RegularizedRisk(const RiskSpec& risk, double epsilon);

    double epsilon() const noexcept { return epsilon_; }
    double crossover() const noexcept { return x_eps_; }
    double rate(double x) const;

private:
    RiskSpec risk_;
    double epsilon_;
    double x_eps_;
};

RegularizedRisk regularize_rho(const RiskSpec& risk, double epsilon);

/// Bundle of everything that defines one instance of the model.
struct Model {
    ModelParams params;
    CostSpec costs;
    RiskSpec risk;
    SalvageSpec salvage;
};

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    std::optional<double> witness;  ///< first failing point, when there is one
    std::string detail;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;

    bool passed() const;
    /// First failing check, or nullptr.
    const AssumptionCheck* first_failure() const;
};

/// Checks parameter signs and the standing assumptions on theta, rho, L and c
/// on a 10^4-point grid. Failures are reported, never thrown.
ValidationReport validate_params(const ModelParams& params, const CostSpec& costs,
                                 const RiskSpec& risk, const SalvageSpec& salvage);

inline ValidationReport validate_params(const Model& m) {
    return validate_params(m.params, m.costs, m.risk, m.salvage);
}

}  // namespace sovdebt
