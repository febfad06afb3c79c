#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rssipred {

// Valid RSSI window accepted at ingestion (dBm).
inline constexpr double kMinRssiDbm = -130.0;
inline constexpr double kMaxRssiDbm = 20.0;

struct RssiSample {
    std::uint64_t seq = 0;
    double t = 0.0;     // seconds
    double rssi = 0.0;  // dBm
    std::optional<double> tx_power;  // dBm

    friend bool operator==(const RssiSample&, const RssiSample&) = default;
};

// Default timestamp of a sequence number: seq * interval, quantized to whole
// microseconds so that it survives a 6-decimal CSV round trip bit-exactly.
double nominal_time(std::uint64_t seq, double nominal_interval);

/// An ordered, gap-tolerant stream of received-power observations.
///
/// Samples are sorted by `seq` with no duplicates, and `t` strictly increases
/// with `seq`. A missing sequence number is a lost packet. Immutable once
/// constructed.
class Trace {
public:
    using Meta = std::map<std::string, std::string>;

    Trace() = default;
    // Throws ValidationError if the ordering invariants do not hold or any
    // rssi is non-finite.
    Trace(std::vector<RssiSample> samples, double nominal_interval, Meta meta = {});

    std::span<const RssiSample> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const RssiSample& operator[](std::size_t i) const { return samples_[i]; }

    double nominal_interval() const noexcept { return interval_; }
    const Meta& meta() const noexcept { return meta_; }

    // 1 - |samples| / (max_seq - min_seq + 1); 0 for an empty trace.
    double loss_ratio() const noexcept;
    // t_last - t_first; 0 for fewer than two samples.
    double span_seconds() const noexcept;

    std::vector<double> rssi_values() const;

private:
    std::vector<RssiSample> samples_;
    double interval_ = 0.1;
    Meta meta_;
};

struct DerivativePoint {
    std::uint64_t seq = 0;
    double t = 0.0;
    double slope = 0.0;  // dB/s
};

// r'(t) estimates, one per sample that has a predecessor in the trace.
struct DerivativeSeries {
    std::vector<DerivativePoint> points;

    std::size_t size() const noexcept { return points.size(); }
};

// Backward first difference over the actual elapsed time, so a sample
// following a gap divides by the whole gap span. Requires >= 2 samples.
DerivativeSeries derivative_series(const Trace& trace);

struct IngestResult {
    Trace trace;
    std::size_t rejected = 0;    // rows whose rssi fell outside the valid window
    std::size_t duplicates = 0;  // rows overwritten by a later row with the same seq
};

// Reads `seq,t_s,rssi_dbm,tx_power_dbm` CSV (t_s and tx_power_dbm optional).
IngestResult ingest_csv(const std::filesystem::path& path, double nominal_interval);
IngestResult ingest_csv(std::istream& in, double nominal_interval);

// Writes the same schema: t_s with 6 decimals, dBm fields with 2 decimals.
void export_csv(const Trace& trace, std::ostream& out);
void export_csv(const Trace& trace, const std::filesystem::path& path);

}  // namespace rssipred
