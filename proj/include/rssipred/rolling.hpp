#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>

#include "rssipred/predictor.hpp"

namespace rssipred::predictor {

struct RefitPolicy {
    std::size_t window = 512;      // samples kept for fitting
    std::size_t refit_every = 64;  // received samples between refits
    std::size_t min_samples = 64;  // samples required before the first fit
    std::size_t min_pairs = stats::kDefaultMinPairs;
};

/// Owns a sliding window of received samples and refits one model at a fixed
/// lag every `refit_every` arrivals. Single writer; `model()` hands out
/// copies.
class RollingFitter {
public:
    RollingFitter(Method method, std::size_t lag_steps, double interval, RefitPolicy policy = {});

    // Appends a received sample (seq must increase) and refits when due.
    void push(const RssiSample& sample);

    const std::optional<PredictorModel>& model() const noexcept { return model_; }
    const std::string& last_error() const noexcept { return last_error_; }
    std::size_t refits() const noexcept { return refits_; }
    std::size_t lag_steps() const noexcept { return lag_steps_; }
    Method method() const noexcept { return method_; }

private:
    void refit();

    Method method_;
    std::size_t lag_steps_;
    double interval_;
    RefitPolicy policy_;
    std::deque<RssiSample> window_;
    std::size_t since_fit_ = 0;
    std::size_t refits_ = 0;
    std::optional<PredictorModel> model_;
    std::string last_error_;
};

}  // namespace rssipred::predictor
