#include "rssipred/predictor.hpp"

#include <cmath>

#include <fmt/format.h>

#include "rssipred/errors.hpp"

namespace rssipred::predictor {

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::normal_eq: return "normal_eq";
        case Method::orthonormal: return "orthonormal";
        case Method::simplified: return "simplified";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "normal_eq") return Method::normal_eq;
    if (name == "orthonormal") return Method::orthonormal;
    if (name == "simplified") return Method::simplified;
    throw ValidationError(fmt::format("unknown method '{}'", name));
}

namespace {

PredictorModel base_model(Method method, const stats::MomentSet& m) {
    PredictorModel model;
    model.method = method;
    model.tau = m.tau;
    model.interval = m.lag_steps > 0 ? m.tau / static_cast<double>(m.lag_steps) : 0.0;
    model.mean_r = m.mean_r;
    model.mean_rp = m.mean_rp;
    model.mean_target = m.mean_target;
    model.source_moments = m;
    return model;
}

// A derivative with no spread relative to rr0 / dt^2 (constant-slope trace).
bool flat_derivative(const stats::MomentSet& m) {
    if (m.lag_steps == 0 || !(m.tau > 0.0)) return false;
    const double dt = m.tau / static_cast<double>(m.lag_steps);
    return !(m.rprp0 > kSingularityFloor * m.rr0 / (dt * dt));
}

}  // namespace

PredictorModel fit_normal_equations(const stats::MomentSet& m) {
    const double det = m.rr0 * m.rprp0 - m.rpr0 * m.rpr0;
    if (!(m.rr0 > 0.0) || !(m.rprp0 > 0.0) || !(det > kSingularityFloor * m.rr0 * m.rprp0) ||
        flat_derivative(m)) {
        throw ValidationError(fmt::format("degenerate moments: D = {:.6e}", det));
    }
    PredictorModel model = base_model(Method::normal_eq, m);
    model.rho_r = (m.rr_tau * m.rprp0 - m.rpr0 * m.rrp_tau) / det;
    model.rho_rp = (m.rr0 * m.rrp_tau - m.rpr0 * m.rr_tau) / det;
    model.analytic_mse = m.rr_target0 - model.rho_r * m.rr_tau - model.rho_rp * m.rrp_tau;
    return model;
}

PredictorModel fit_orthonormal(const stats::MomentSet& m) {
    if (!(m.rr0 > 0.0)) throw ValidationError("non-positive-definite moments: rr0 <= 0");
    // Residual variance of r' after removing its projection on r.
    const double residual = m.rprp0 - m.rpr0 * m.rpr0 / m.rr0;
    if (!(residual > kSingularityFloor * m.rprp0) || flat_derivative(m)) {
        throw ValidationError(fmt::format("non-positive-definite moments: radicand {:.6e}", residual));
    }
    OrthonormalBasis b;
    b.rho11 = 1.0 / std::sqrt(m.rr0);
    b.rho22 = 1.0 / std::sqrt(residual);
    b.rho21 = -b.rho22 * m.rpr0 / m.rr0;
    // Projections of r(t+tau) on the unit-variance basis.
    b.pi1 = b.rho11 * m.rr_tau;
    b.pi2 = b.rho21 * m.rr_tau + b.rho22 * m.rrp_tau;

    PredictorModel model = base_model(Method::orthonormal, m);
    model.rho_r = b.rho_r();
    model.rho_rp = b.rho_rp();
    model.basis = b;
    model.analytic_mse = m.rr_target0 - b.pi1 * b.pi1 - b.pi2 * b.pi2;
    return model;
}

PredictorModel fit_simplified(double tau, const std::optional<stats::MomentSet>& m) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be non-negative");
    PredictorModel model;
    model.method = Method::simplified;
    model.tau = tau;
    model.rho_r = 1.0;
    model.rho_rp = tau;
    if (m) {
        model.interval = m->lag_steps > 0 ? m->tau / static_cast<double>(m->lag_steps) : 0.0;
        model.analytic_mse = analytic_mse(model, *m);
        model.source_moments = *m;
    }
    return model;
}

PredictorModel fit(Method method, const stats::MomentSet& m) {
    switch (method) {
        case Method::normal_eq: return fit_normal_equations(m);
        case Method::orthonormal: return fit_orthonormal(m);
        case Method::simplified: return fit_simplified(m.tau, m);
    }
    throw ValidationError("unknown method");
}

double analytic_mse(const PredictorModel& model, const stats::MomentSet& m) {
    const double a = model.rho_r;
    const double b = model.rho_rp;
    return m.rr_target0 - 2.0 * (a * m.rr_tau + b * m.rrp_tau) + a * a * m.rr0 + 2.0 * a * b * m.rpr0 + b * b * m.rprp0;
}

Prediction predict(const PredictorModel& model, const Anchor& anchor, std::size_t n_steps, double interval) {
    if (n_steps < 1) throw ValidationError("n_steps must be at least 1");
    if (!(interval > 0.0)) throw ValidationError("interval must be positive");
    const double tau = static_cast<double>(n_steps) * interval;

    double rho_rp = model.rho_rp;
    if (model.method == Method::simplified) {
        rho_rp = tau;
    } else if (std::abs(model.tau - tau) > 1e-9 * std::max(1.0, tau)) {
        throw ValidationError(fmt::format("model fitted at tau {} s cannot predict {} steps of {} s", model.tau, n_steps, interval));
    }

    Prediction p;
    p.t_target = anchor.t + tau;
    p.value = model.mean_target + model.rho_r * (anchor.rssi - model.mean_r) + rho_rp * (anchor.slope - model.mean_rp);
    if (!std::isfinite(p.value)) throw ValidationError("non-finite prediction");
    p.mse = model.analytic_mse;
    p.steps_ahead = n_steps;
    p.anchor = anchor;
    return p;
}

}  // namespace rssipred::predictor
