#include "rssipred/atpc.hpp"

#include <algorithm>
#include <cmath>

#include "rssipred/errors.hpp"

namespace rssipred::atpc {

std::string_view to_string(Mode m) noexcept { return m == Mode::tracking ? "tracking" : "fallback"; }

void AtpcConfig::validate() const {
    radio.validate();
    if (threshold_dbm < radio.sensitivity_dbm) throw ValidationError("threshold below radio sensitivity");
    if (margin_db < 0.0) throw ValidationError("margin must be non-negative");
    if (max_missed_acks < 1) throw ValidationError("max_missed_acks must be at least 1");
    if (predictor_method == predictor::Method::normal_eq) {
        throw ValidationError("the controller uses the orthonormal or simplified predictor");
    }
}

AtpcController::AtpcController(AtpcConfig config) : AtpcController(config, config.radio.max_tx_dbm) {}

AtpcController::AtpcController(AtpcConfig config, double initial_tx_dbm) : config_(std::move(config)) {
    config_.validate();
    state_.last_tx_dbm = std::clamp(initial_tx_dbm, config_.radio.min_tx_dbm, config_.radio.max_tx_dbm);
    fitters_.reserve(config_.max_missed_acks);
    for (std::size_t lag = 1; lag <= config_.max_missed_acks; ++lag) {
        fitters_.emplace_back(config_.predictor_method, lag, config_.radio.lag_unit_s, config_.refit);
    }
}

double AtpcController::tx_for_gain(double gain_db) const noexcept {
    return config_.threshold_dbm + config_.margin_db - gain_db;
}

double AtpcController::set_next(double tx_dbm) {
    state_.insufficient_headroom = tx_dbm > config_.radio.max_tx_dbm;
    state_.last_tx_dbm = std::clamp(tx_dbm, config_.radio.min_tx_dbm, config_.radio.max_tx_dbm);
    return state_.last_tx_dbm;
}

double AtpcController::fall_back() {
    state_.mode = Mode::fallback;
    state_.insufficient_headroom = false;
    state_.last_tx_dbm = config_.radio.max_tx_dbm;
    return state_.last_tx_dbm;
}

double AtpcController::on_ack(double ack_rssi_dbm) {
    if (!std::isfinite(ack_rssi_dbm)) throw ValidationError("ack rssi must be finite");
    const std::uint64_t seq = seq_++;
    const double t = nominal_time(seq, config_.radio.lag_unit_s);
    const double gain = ack_rssi_dbm - state_.last_tx_dbm;

    const RssiSample sample{seq, t, gain, state_.last_tx_dbm};
    anchor_slope_.reset();
    if (anchor_) anchor_slope_ = (gain - anchor_->rssi) / (t - anchor_->t);
    anchor_ = sample;
    for (auto& f : fitters_) f.push(sample);

    state_.consecutive_missed = 0;
    state_.mode = Mode::tracking;
    state_.path_gain_estimate_db = gain;
    state_.predicted_rssi_dbm.reset();
    return set_next(tx_for_gain(gain));
}

double AtpcController::on_missed_ack() {
    const std::uint64_t seq = seq_++;
    const std::size_t n = ++state_.consecutive_missed;
    state_.predicted_rssi_dbm.reset();
    if (n >= config_.max_missed_acks || !anchor_ || !anchor_slope_) return fall_back();

    const auto steps = static_cast<std::size_t>(seq - anchor_->seq);
    if (steps < 1 || steps > fitters_.size()) return fall_back();
    const auto& model = fitters_[steps - 1].model();
    if (!model) return fall_back();

    try {
        const predictor::Anchor anchor{anchor_->t, anchor_->rssi, *anchor_slope_};
        const auto p = predictor::predict(*model, anchor, steps, config_.radio.lag_unit_s);
        state_.path_gain_estimate_db = p.value;
        state_.predicted_rssi_dbm = p.value + state_.last_tx_dbm;
        if (state_.mode == Mode::fallback) return fall_back();
        return set_next(tx_for_gain(p.value));
    } catch (const ValidationError&) {
        return fall_back();
    }
}

LoopResult run_closed_loop(const AtpcConfig& config, const linksim::ChannelModel& channel,
                           const linksim::LossModel& loss, std::size_t n_packets, Policy policy) {
    AtpcController controller(config);
    linksim::ChannelProcess process(channel, config.radio.rate_pps);
    linksim::LossProcess losses(loss);

    LoopResult result;
    result.packets.reserve(n_packets);
    double tx_sum = 0.0;
    for (std::size_t k = 0; k < n_packets; ++k) {
        PacketRecord rec;
        rec.seq = k;
        rec.mode = controller.state().mode;
        rec.tx_dbm = policy == Policy::adaptive ? controller.next_tx_dbm() : config.radio.max_tx_dbm;
        rec.rssi_dbm = std::round((rec.tx_dbm + process.next_gain_db()) * 100.0) / 100.0;
        const bool lost = losses.next_lost();
        rec.delivered = !lost && rec.rssi_dbm >= config.radio.sensitivity_dbm;
        if (policy == Policy::adaptive) {
            if (rec.delivered) {
                controller.on_ack(rec.rssi_dbm);
            } else {
                controller.on_missed_ack();
                rec.predicted_dbm = controller.state().predicted_rssi_dbm;
            }
        }

        auto& s = result.summary;
        ++s.packets;
        tx_sum += rec.tx_dbm;
        if (rec.delivered) {
            ++s.delivered;
            if (rec.rssi_dbm >= config.threshold_dbm) ++s.delivered_above_threshold;
        }
        if (rec.mode == Mode::fallback) ++s.fallback_packets;
        result.packets.push_back(rec);
    }
    auto& s = result.summary;
    s.mean_tx_dbm = s.packets > 0 ? tx_sum / static_cast<double>(s.packets) : 0.0;
    s.fraction_above_threshold =
        s.delivered > 0 ? static_cast<double>(s.delivered_above_threshold) / static_cast<double>(s.delivered) : 0.0;
    return result;
}

}  // namespace rssipred::atpc
