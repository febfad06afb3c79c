#include "rssipred/stats.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "rssipred/errors.hpp"

namespace rssipred::stats {

namespace {

// Index of the sample carrying `seq`, if present.
std::optional<std::size_t> find_seq(std::span<const RssiSample> samples, std::uint64_t seq) {
    auto it = std::lower_bound(samples.begin(), samples.end(), seq,
                               [](const RssiSample& s, std::uint64_t v) { return s.seq < v; });
    if (it == samples.end() || it->seq != seq) return std::nullopt;
    return static_cast<std::size_t>(it - samples.begin());
}

std::size_t lag_steps_for(double tau, double interval) {
    const double k = tau / interval;
    const double rounded = std::round(k);
    if (!(tau > 0.0) || rounded < 1.0 || std::abs(k - rounded) > 1e-9 * std::max(1.0, rounded)) {
        throw ValidationError(fmt::format("tau {} s is not a positive multiple of the sample interval {} s", tau, interval));
    }
    return static_cast<std::size_t>(rounded);
}

}  // namespace

AcfEstimate sample_acf(const Trace& trace, std::size_t max_lag, std::size_t min_pairs) {
    if (max_lag < 1) throw ValidationError("max_lag must be at least 1");
    if (trace.size() < max_lag + 2) {
        throw ValidationError(fmt::format("trace of {} samples too short for max_lag {}", trace.size(), max_lag));
    }
    const auto samples = trace.samples();
    const std::size_t n = samples.size();

    double mean = 0.0;
    for (const auto& s : samples) mean += s.rssi;
    mean /= static_cast<double>(n);

    AcfEstimate acf;
    acf.interval = trace.nominal_interval();
    acf.mean = mean;
    acf.lags.resize(max_lag + 1);
    acf.values.resize(max_lag + 1);
    acf.n_pairs.resize(max_lag + 1);

    for (std::size_t k = 0; k <= max_lag; ++k) {
        double sum = 0.0;
        std::size_t pairs = 0;
        std::size_t j = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t want = samples[i].seq + k;
            j = std::max(j, i);
            while (j < n && samples[j].seq < want) ++j;
            if (j == n) break;
            if (samples[j].seq == want) {
                sum += (samples[i].rssi - mean) * (samples[j].rssi - mean);
                ++pairs;
            }
        }
        acf.lags[k] = k;
        acf.values[k] = sum / static_cast<double>(n);
        acf.n_pairs[k] = pairs;
    }

    if (!(acf.values[0] > 0.0)) throw ValidationError("degenerate process: zero variance");
    for (std::size_t k = 0; k <= max_lag; ++k) {
        if (acf.n_pairs[k] < min_pairs) {
            throw ValidationError(fmt::format("insufficient pairs at lag {}: {} < {}", k, acf.n_pairs[k], min_pairs));
        }
    }

    acf.normalized.resize(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k) acf.normalized[k] = acf.values[k] / acf.values[0];
    acf.normalized[0] = 1.0;

    const double dt = acf.interval;
    acf.d1.assign(max_lag + 1, 0.0);
    for (std::size_t k = 1; k < max_lag; ++k) {
        acf.d1[k] = (acf.values[k + 1] - acf.values[k - 1]) / (2.0 * dt);
    }
    acf.d1[max_lag] = (acf.values[max_lag] - acf.values[max_lag - 1]) / dt;
    acf.d1[0] = 0.0;
    // values[-1] == values[1]
    acf.d2_at_0 = 2.0 * (acf.values[1] - acf.values[0]) / (dt * dt);
    return acf;
}

MomentSet moment_set(const Trace& trace, const DerivativeSeries& deriv, double tau, MomentOptions opts) {
    const std::size_t k = lag_steps_for(tau, trace.nominal_interval());
    const auto samples = trace.samples();

    struct Triple {
        double r, rp, target;
    };
    std::vector<Triple> triples;
    triples.reserve(deriv.size());
    for (const auto& p : deriv.points) {
        const auto here = find_seq(samples, p.seq);
        if (!here) continue;
        const auto ahead = find_seq(samples, p.seq + k);
        if (!ahead) continue;
        triples.push_back({samples[*here].rssi, p.slope, samples[*ahead].rssi});
    }
    if (triples.size() < opts.min_pairs) {
        throw ValidationError(fmt::format("insufficient support at tau {} s: {} triples < {}", tau, triples.size(), opts.min_pairs));
    }

    MomentSet m;
    m.tau = tau;
    m.lag_steps = k;
    m.n = triples.size();
    m.mean_removed = opts.mean_removed;
    const double count = static_cast<double>(triples.size());
    if (opts.mean_removed) {
        for (const auto& tr : triples) {
            m.mean_r += tr.r;
            m.mean_rp += tr.rp;
            m.mean_target += tr.target;
        }
        m.mean_r /= count;
        m.mean_rp /= count;
        m.mean_target /= count;
    }
    for (const auto& tr : triples) {
        const double x = tr.r - m.mean_r;
        const double d = tr.rp - m.mean_rp;
        const double y = tr.target - m.mean_target;
        m.rr0 += x * x;
        m.rpr0 += x * d;
        m.rprp0 += d * d;
        m.rr_tau += y * x;
        m.rrp_tau += y * d;
        m.rr_target0 += y * y;
    }
    m.rr0 /= count;
    m.rpr0 /= count;
    m.rprp0 /= count;
    m.rr_tau /= count;
    m.rrp_tau /= count;
    m.rr_target0 /= count;
    return m;
}

DerivativeIdentityReport check_derivative_identities(const AcfEstimate& acf, const MomentSet& m) {
    if (acf.values.empty()) throw ValidationError("empty ACF estimate");
    const double k_real = m.tau / acf.interval;
    const auto k = static_cast<std::size_t>(std::llround(k_real));
    if (std::abs(k_real - static_cast<double>(k)) > 1e-9 * std::max(1.0, k_real) || k > acf.max_lag()) {
        throw ValidationError(fmt::format("tau {} s is not on the ACF lag grid", m.tau));
    }
    const double scale = acf.values[0];
    DerivativeIdentityReport report;
    const double plus = std::abs(m.rrp_tau - acf.d1[k]);
    const double minus = std::abs(m.rrp_tau + acf.d1[k]);
    report.sign = plus <= minus ? 1 : -1;
    report.d1_deviation = std::min(plus, minus) / scale;
    report.d2_deviation = std::abs(m.rprp0 + acf.d2_at_0) / scale;
    report.low_confidence = acf.normalized.size() < 2 || acf.normalized[1] < 0.5;
    return report;
}

}  // namespace rssipred::stats
