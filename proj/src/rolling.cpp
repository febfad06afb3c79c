#include "rssipred/rolling.hpp"

#include <vector>

#include "rssipred/errors.hpp"

namespace rssipred::predictor {

RollingFitter::RollingFitter(Method method, std::size_t lag_steps, double interval, RefitPolicy policy)
    : method_(method), lag_steps_(lag_steps), interval_(interval), policy_(policy) {
    if (lag_steps_ < 1) throw ValidationError("lag must be at least one step");
    if (!(interval_ > 0.0)) throw ValidationError("interval must be positive");
    if (policy_.window < 2 || policy_.refit_every < 1) throw ValidationError("invalid refit policy");
    if (method_ == Method::simplified) {
        model_ = fit_simplified(static_cast<double>(lag_steps_) * interval_);
        model_->interval = interval_;
    }
}

void RollingFitter::push(const RssiSample& sample) {
    if (!window_.empty() && sample.seq <= window_.back().seq) {
        throw ValidationError("rolling fitter requires increasing sequence numbers");
    }
    window_.push_back(sample);
    if (window_.size() > policy_.window) window_.pop_front();
    ++since_fit_;

    const bool first_fit_due = refits_ == 0 && window_.size() >= policy_.min_samples;
    if (first_fit_due || (refits_ > 0 && since_fit_ >= policy_.refit_every)) refit();
}

void RollingFitter::refit() {
    since_fit_ = 0;
    ++refits_;
    try {
        const Trace trace(std::vector<RssiSample>(window_.begin(), window_.end()), interval_);
        const auto deriv = derivative_series(trace);
        const auto moments = stats::moment_set(trace, deriv, static_cast<double>(lag_steps_) * interval_,
                                               {.min_pairs = policy_.min_pairs, .mean_removed = true});
        model_ = fit(method_, moments);
        if (method_ == Method::simplified) model_->interval = interval_;
        last_error_.clear();
    } catch (const ValidationError& e) {
        // Keep the previous model; the simplified model never needs statistics.
        last_error_ = e.what();
    }
}

}  // namespace rssipred::predictor
