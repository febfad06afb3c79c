#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "rssipred/linksim.hpp"
#include "rssipred/predictor.hpp"
#include "rssipred/rolling.hpp"

namespace rssipred::atpc {

enum class Mode { tracking, fallback };

std::string_view to_string(Mode m) noexcept;

struct AtpcConfig {
    double threshold_dbm = -90.0;
    double margin_db = 3.0;
    std::size_t max_missed_acks = 5;
    linksim::RadioProfile radio;
    predictor::Method predictor_method = predictor::Method::orthonormal;
    predictor::RefitPolicy refit;

    void validate() const;
};

struct AtpcState {
    double last_tx_dbm = 0.0;
    std::size_t consecutive_missed = 0;
    std::optional<double> path_gain_estimate_db;  // rssi - tx, observed or predicted
    std::optional<double> predicted_rssi_dbm;     // set while bridging lost ACKs
    Mode mode = Mode::tracking;
    bool insufficient_headroom = false;  // required power exceeded max_tx
};

/// Closed-loop transmit power controller driven by one event per sent
/// packet: `on_ack` with the receiver-side RSSI it reports, or
/// `on_missed_ack`. Each call returns the power for the next packet.
///
/// The predictor runs on the path-gain series (rssi - tx), which does not
/// move when the controller changes its own power. Lost ACKs are bridged by
/// predicting the gain n steps past the last acknowledged packet; after
/// `max_missed_acks` consecutive losses the controller falls back to max_tx.
class AtpcController {
public:
    explicit AtpcController(AtpcConfig config);
    AtpcController(AtpcConfig config, double initial_tx_dbm);

    double on_ack(double ack_rssi_dbm);
    double on_missed_ack();

    const AtpcState& state() const noexcept { return state_; }
    const AtpcConfig& config() const noexcept { return config_; }
    // Power the next packet will be sent with.
    double next_tx_dbm() const noexcept { return state_.last_tx_dbm; }
    // Sequence number the next packet will carry.
    std::uint64_t next_seq() const noexcept { return seq_; }

    // Power the loop would choose for a given path gain (before clamping it
    // is threshold + margin - gain).
    double tx_for_gain(double gain_db) const noexcept;

private:
    double set_next(double tx_dbm);
    double fall_back();

    AtpcConfig config_;
    AtpcState state_;
    std::uint64_t seq_ = 0;
    std::vector<predictor::RollingFitter> fitters_;  // lag k at index k - 1
    std::optional<RssiSample> anchor_;               // last acknowledged gain sample
    std::optional<double> anchor_slope_;
};

struct PacketRecord {
    std::uint64_t seq = 0;
    double tx_dbm = 0.0;
    double rssi_dbm = 0.0;  // receiver-side power, whether or not delivered
    bool delivered = false;
    std::optional<double> predicted_dbm;  // controller's estimate when the ACK was lost
    Mode mode = Mode::tracking;           // controller mode when the packet was sent
};

struct LoopSummary {
    std::size_t packets = 0;
    std::size_t delivered = 0;
    std::size_t delivered_above_threshold = 0;
    double fraction_above_threshold = 0.0;  // of delivered packets
    double mean_tx_dbm = 0.0;
    std::size_t fallback_packets = 0;
};

enum class Policy { adaptive, always_max };

struct LoopResult {
    std::vector<PacketRecord> packets;
    LoopSummary summary;
};

/// Runs the loop against a simulated channel. A packet is delivered when the
/// loss model keeps it and it arrives at or above the radio's sensitivity;
/// its ACK is returned exactly when it is delivered.
LoopResult run_closed_loop(const AtpcConfig& config, const linksim::ChannelModel& channel,
                           const linksim::LossModel& loss, std::size_t n_packets, Policy policy = Policy::adaptive);

}  // namespace rssipred::atpc
