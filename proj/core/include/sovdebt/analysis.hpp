#pragma once

/// @file analysis.hpp
/// @brief Explicit constants and bound curves of the model, verification of a
/// computed Solution against them, and classification of the controls near x*.
///
/// Bound curves:
///   beta(t) = max_{0<s<=t} rho(s) ln(t/s) + (lambda + r)/theta_min + sigma^2/2
///   V1(x)   = B inf_{x<=t<x*} beta(t) / (r ln(t/x) + beta(t))          (V <= V1)
///   V2(x)   = B (1 - ln(x*/x)(1 - x/x*) / [ln(x*/xd)(x* - xd) / x*])   (V >= V2 on [xd, x*])
///   p-(x)   = 1 - k x^gamma on [0, xbar0]                              (p >= p-)

#include "sovdebt/model.hpp"
#include "sovdebt/solver.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace sovdebt {

struct BoundsReport {
    double theta_min = 1.0;
    double K1 = 0.0;
    double x1 = 0.0;
    double M1 = 0.0;
    /// M* overflows double for realistic inputs; only its logarithm is kept.
    double log_M_star = 0.0;
    double gamma = 1.0;
    double k = 0.0;  ///< may be +inf when x_bar0 underflows; log_k is always finite
    double log_k = 0.0;
    double x_bar0 = 0.0;
    double log_x_bar0 = 0.0;
    /// Integral of rho(t)/t over (0, x*) plus constants; nullopt when divergent.
    std::optional<double> beta_star;
    /// c'(0)/M*, usually far below any grid spacing.
    double v_dead_zone = 0.0;
    double log_v_dead_zone = 0.0;
    double C1 = 0.0;
    double salvage_lipschitz = 0.0;
};

BoundsReport compute_constants(const Model& model);

/// beta(t) for 0 <= t < x*. `scan_points` sets the coarse grid before the
/// golden-section refinement.
double compute_beta(const Model& model, double theta_min, double t,
                    std::size_t scan_points = 10000);

/// Quadrature of rho(t)/t over (0, x*) plus (lambda + r)/theta_min + sigma^2/2.
/// nullopt for the power family with q >= 1 or when the integral exceeds 1e12.
std::optional<double> compute_beta_star(const Model& model);

/// Tabulates beta once so that V1 can be evaluated at many points.
class SupersolutionV1 {
public:
    explicit SupersolutionV1(const Model& model);

    /// V1(x) for 0 < x < x*; 0 at x = 0 and B at x >= x*.
    double operator()(double x) const;
    double beta(double t) const;

private:
    Model model_;
    double theta_min_;
    std::vector<double> t_;
    std::vector<double> beta_;
};

double supersolution_V1(const Model& model, double x);

struct XDiamond {
    std::optional<double> value;
    std::string reason;  ///< empty when found
};

/// Smallest grid point of [x*/2, x*) from which the tail inequality holds on
/// the rest of the scan. The scan is widened once toward x* before giving up.
XDiamond find_x_diamond(const Model& model, std::size_t scan_points = 10000);

/// V2(x) for x in [x_diamond, x*].
double subsolution_V2(const ModelParams& params, double x_diamond, double x);

/// 1 - k x^gamma on [0, x_bar0]; exact at both endpoints.
double subsolution_p_minus(const BoundsReport& bounds, double x);

enum class Regime { DevaluePay, NoAction, Indeterminate };

const char* to_string(Regime regime);

struct RegimeClassification {
    Regime label = Regime::Indeterminate;
    std::optional<double> beta_star;
    /// B r min{1/c'(0), 1/(L'(0) x*)}
    double devalue_threshold = 0.0;
    bool devalue_test = false;
    double x_star = 0.0;
    /// 2/(r + lambda)
    double x_star_threshold = 0.0;
    /// rho(x)(x* - x)^2 -> inf
    bool fast_blowup = false;
    bool no_action_test = false;
};

RegimeClassification classify_regime(const Model& model);

enum class CheckStatus { Pass, Fail, NotApplicable, Vacuous };

const char* to_string(CheckStatus status);

struct VerificationCheck {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    double worst_violation = 0.0;
    std::optional<double> witness;
    std::string detail;
};

struct VerificationReport {
    std::vector<VerificationCheck> checks;

    /// True when no check failed; n/a and vacuous checks count as passed.
    bool passed() const;
    const VerificationCheck* find(const std::string& name) const;
};

struct VerifyOptions {
    double steady_state_tol = 1e-8;
    double range_tol = 1e-6;
    double bound_tol = 1e-6;         ///< relative to B for V bounds, absolute for p
    double monotone_tol = 1e-8;      ///< relative to B
    double control_threshold = 1e-9;
    double near_threshold_fraction = 0.05;
};

VerificationReport verify_solution(const Solution& solution, const Model& model,
                                   const VerifyOptions& options = {});

struct BoundCurves {
    std::vector<double> x;
    std::vector<double> beta;
    std::vector<double> V1;
    /// NaN outside [x_diamond, x*] or when x_diamond is not found.
    std::vector<double> V2;
    /// NaN outside [0, x_bar0].
    std::vector<double> p_minus;
    XDiamond x_diamond;
};

/// Samples every bound curve on n uniform points of [0, x*].
BoundCurves sample_bound_curves(const Model& model, const BoundsReport& bounds,
                                std::size_t n = 201);

}  // namespace sovdebt
