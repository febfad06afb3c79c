#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "rssipred/stats.hpp"

namespace rssipred::predictor {

enum class Method { normal_eq, orthonormal, simplified };

std::string_view to_string(Method m) noexcept;
// Accepts "normal_eq", "orthonormal", "simplified". Throws ValidationError.
Method parse_method(std::string_view name);

// Orthonormal basis p1 = rho11 r, p2 = rho21 r + rho22 r' with
// E[p1^2] = E[p2^2] = 1 and E[p1 p2] = 0, plus the projections of the
// future sample onto it.
struct OrthonormalBasis {
    double rho11 = 0.0;
    double rho21 = 0.0;
    double rho22 = 0.0;
    double pi1 = 0.0;
    double pi2 = 0.0;

    // (rho_r, rho_rp) expressed back in terms of r and r'.
    double rho_r() const noexcept { return pi1 * rho11 + pi2 * rho21; }
    double rho_rp() const noexcept { return pi2 * rho22; }
};

/// Fitted two-term predictor  r^(t+tau) = rho_r r(t) + rho_rp r'(t)  on
/// centered data. Bound to its fitting lag, except for the simplified model,
/// which is lag-parametric.
struct PredictorModel {
    Method method = Method::normal_eq;
    double tau = 0.0;       // s
    double interval = 0.0;  // s per step; 0 when unknown
    double rho_r = 0.0;
    double rho_rp = 0.0;    // s
    std::optional<OrthonormalBasis> basis;
    // Centering used at fit time, added back at prediction time. All zero for
    // the simplified model.
    double mean_r = 0.0;
    double mean_rp = 0.0;
    double mean_target = 0.0;
    std::optional<double> analytic_mse;  // dB^2
    std::optional<stats::MomentSet> source_moments;
};

// Relative determinant floor for the 2x2 moment matrix.
inline constexpr double kSingularityFloor = 1e-10;

// Closed-form 2x2 solve of the normal equations.
PredictorModel fit_normal_equations(const stats::MomentSet& m);

// Gram-Schmidt path: no linear system is solved.
PredictorModel fit_orthonormal(const stats::MomentSet& m);

// rho_r = 1, rho_rp = tau. With moments, also reports the resulting MSE.
PredictorModel fit_simplified(double tau, const std::optional<stats::MomentSet>& m = std::nullopt);

PredictorModel fit(Method method, const stats::MomentSet& m);

// E{(y - rho_r x - rho_rp d)^2} under the moments, y = r(t+tau). The first
// term is E{y^2} = rr_target0, which estimates R(0) over the same index set.
// For optimally fitted coefficients this reduces to
// rr_target0 - rho_r rr_tau - rho_rp rrp_tau.
double analytic_mse(const PredictorModel& model, const stats::MomentSet& m);

struct Anchor {
    double t = 0.0;
    double rssi = 0.0;   // dBm
    double slope = 0.0;  // dB/s
};

struct Prediction {
    double t_target = 0.0;
    double value = 0.0;  // dBm
    std::optional<double> mse;
    std::size_t steps_ahead = 0;
    Anchor anchor;
};

// Predicts n_steps * interval ahead of the anchor. Statistical models must
// have been fitted at exactly that lag.
Prediction predict(const PredictorModel& model, const Anchor& anchor, std::size_t n_steps, double interval);

}  // namespace rssipred::predictor
