#pragma once

#include <cstddef>
#include <vector>

#include "rssipred/trace.hpp"

namespace rssipred::stats {

inline constexpr std::size_t kDefaultMinPairs = 8;

/// Sample autocovariance of the received power over lags 0..L.
///
/// `values[k]` is the mean-removed, biased (1/N) estimate built only from
/// sample pairs whose sequence numbers differ by exactly k, so lost packets
/// simply contribute no pair. Only k >= 0 is stored; the ACF is even.
struct AcfEstimate {
    double interval = 0.0;           // seconds per lag step
    double mean = 0.0;               // removed process mean (dBm)
    std::vector<std::size_t> lags;   // 0..L
    std::vector<double> values;      // dB^2
    std::vector<double> normalized;  // values / values[0]
    std::vector<std::size_t> n_pairs;
    std::vector<double> d1;          // dR/dtau (dB^2/s), d1[0] == 0
    double d2_at_0 = 0.0;            // d2R/dtau2 at 0 (dB^2/s^2)

    std::size_t max_lag() const noexcept { return lags.empty() ? 0 : lags.back(); }
    double lag_seconds(std::size_t k) const noexcept { return static_cast<double>(k) * interval; }
};

AcfEstimate sample_acf(const Trace& trace, std::size_t max_lag, std::size_t min_pairs = kDefaultMinPairs);

/// The five second-order moments behind the 2x2 normal equations, all
/// estimated over one index set: samples t where r(t), r'(t) and r(t+tau)
/// exist. With `mean_removed`, each variable is centered by its own mean over
/// that set and the means are kept for prediction.
struct MomentSet {
    double rr0 = 0.0;      // E{r r}      dB^2
    double rpr0 = 0.0;     // E{r r'}     dB^2/s
    double rprp0 = 0.0;    // E{r' r'}    dB^2/s^2
    double rr_tau = 0.0;   // E{r(t+tau) r(t)}
    double rrp_tau = 0.0;  // E{r(t+tau) r'(t)}
    // E{r(t+tau)^2} over the same index set. Estimates R(0) like rr0 but is
    // the exact first term of the prediction error expansion.
    double rr_target0 = 0.0;
    double tau = 0.0;         // seconds
    std::size_t lag_steps = 0;
    std::size_t n = 0;
    bool mean_removed = true;
    double mean_r = 0.0;       // mean of r(t)
    double mean_rp = 0.0;      // mean of r'(t)
    double mean_target = 0.0;  // mean of r(t+tau)
};

struct MomentOptions {
    std::size_t min_pairs = kDefaultMinPairs;
    bool mean_removed = true;
};

// tau must be a positive integer multiple of the trace's nominal interval.
MomentSet moment_set(const Trace& trace, const DerivativeSeries& deriv, double tau, MomentOptions opts = {});

struct DerivativeIdentityReport {
    int sign = 1;                 // empirically selected sign s in E{r(t+tau) r'(t)} ~ s * R'(tau)
    double d1_deviation = 0.0;    // |rrp_tau - s*d1(tau)| / R(0)
    double d2_deviation = 0.0;    // |rprp0 + d2_at_0| / R(0)
    bool low_confidence = false;  // lag-1 correlation too weak for finite differences to mean much
};

// Diagnostic only: compares directly estimated cross moments with the
// derivatives of the ACF. Never used for fitting.
DerivativeIdentityReport check_derivative_identities(const AcfEstimate& acf, const MomentSet& m);

}  // namespace rssipred::stats
