#include "rssipred/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rssipred/errors.hpp"

namespace rssipred::eval {

namespace {

EvalRow evaluate_lag(const Trace& trace, predictor::Method method, std::size_t lag, const EvalConfig& config,
                     double range) {
    const auto samples = trace.samples();
    const double interval = trace.nominal_interval();
    predictor::RollingFitter fitter(method, lag, interval, config.refit);

    double sq_sum = 0.0;
    double mse_sum = 0.0;
    std::size_t n = 0;
    std::size_t n_mse = 0;
    std::size_t target = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        fitter.push(samples[i]);
        if (i == 0 || i < config.warmup) continue;
        const auto& model = fitter.model();
        if (!model) continue;

        const std::uint64_t want = samples[i].seq + lag;
        target = std::max(target, i + 1);
        while (target < samples.size() && samples[target].seq < want) ++target;
        if (target == samples.size()) break;
        if (samples[target].seq != want) continue;

        const double slope = (samples[i].rssi - samples[i - 1].rssi) / (samples[i].t - samples[i - 1].t);
        const auto p = predictor::predict(*model, {samples[i].t, samples[i].rssi, slope}, lag, interval);
        const double err = samples[target].rssi - p.value;
        sq_sum += err * err;
        ++n;
        if (p.mse) {
            mse_sum += *p.mse;
            ++n_mse;
        }
    }
    if (n == 0) throw ValidationError(fmt::format("no valid prediction points at lag {}", lag));

    EvalRow row;
    row.lag_steps = lag;
    row.lag_s = static_cast<double>(lag) * interval;
    row.n_predictions = n;
    row.rmse_db = std::sqrt(sq_sum / static_cast<double>(n));
    row.nrmse_pct = range > 0.0 ? std::round(100.0 * row.rmse_db / range * 1e6) / 1e6 : 0.0;
    row.accuracy_pct = 100.0 - row.nrmse_pct;
    if (n_mse == n) row.analytic_mse_db2 = mse_sum / static_cast<double>(n_mse);
    row.method = method;
    return row;
}

}  // namespace

EvalReport evaluate(const Trace& trace, predictor::Method method, std::vector<std::size_t> lags,
                    const EvalConfig& config) {
    if (lags.empty()) throw ValidationError("no lags requested");
    std::sort(lags.begin(), lags.end());
    lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
    if (lags.front() < 1) throw ValidationError("lags must be at least 1");
    if (trace.size() < 2) throw ValidationError("trace too short to evaluate");

    EvalReport report;
    report.meta = trace.meta();
    report.n_samples = trace.size();
    report.loss_ratio = trace.loss_ratio();
    const auto values = trace.rssi_values();
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    report.r_min_dbm = *lo;
    report.r_max_dbm = *hi;

    for (const auto lag : lags) {
        report.rows.push_back(evaluate_lag(trace, method, lag, config, report.r_max_dbm - report.r_min_dbm));
    }
    return report;
}

EvalReport lag_sweep(const Trace& trace, predictor::Method method, std::size_t max_lag, const EvalConfig& config) {
    if (max_lag < 1) throw ValidationError("max_lag must be at least 1");
    std::vector<std::size_t> lags(max_lag);
    for (std::size_t k = 0; k < max_lag; ++k) lags[k] = k + 1;
    return evaluate(trace, method, std::move(lags), config);
}

}  // namespace rssipred::eval
