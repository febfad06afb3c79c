#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rssipred/predictor.hpp"
#include "rssipred/rolling.hpp"
#include "rssipred/trace.hpp"

namespace rssipred::eval {

struct EvalConfig {
    predictor::RefitPolicy refit;
    // Anchors before this many samples are not scored, for every method, so
    // that statistical and simplified rows cover the same targets.
    std::size_t warmup = 64;
};

struct EvalRow {
    std::size_t lag_steps = 0;
    double lag_s = 0.0;
    std::size_t n_predictions = 0;
    double rmse_db = 0.0;
    double nrmse_pct = 0.0;     // 100 * rmse / (r_max - r_min), rounded to 1e-6
    double accuracy_pct = 0.0;  // 100 - nrmse_pct
    std::optional<double> analytic_mse_db2;  // mean over the models used
    predictor::Method method = predictor::Method::orthonormal;
};

struct EvalReport {
    std::vector<EvalRow> rows;  // sorted by lag
    Trace::Meta meta;
    std::size_t n_samples = 0;
    double loss_ratio = 0.0;
    double r_max_dbm = 0.0;
    double r_min_dbm = 0.0;
};

/// Walk-forward evaluation. Each model is refit on a sliding window of
/// samples already received; every sample with a backward neighbour serves
/// as an anchor and is scored against the sample `lag` steps later, if that
/// one was received.
EvalReport evaluate(const Trace& trace, predictor::Method method, std::vector<std::size_t> lags,
                    const EvalConfig& config = {});

EvalReport lag_sweep(const Trace& trace, predictor::Method method, std::size_t max_lag, const EvalConfig& config = {});

}  // namespace rssipred::eval
