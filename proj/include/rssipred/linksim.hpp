#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rssipred/trace.hpp"

namespace rssipred::linksim {

struct RadioProfile {
    std::string name;
    double rate_pps = 0.0;
    double lag_unit_s = 0.0;  // 1 / rate_pps
    double sensitivity_dbm = 0.0;
    double max_tx_dbm = 0.0;
    double min_tx_dbm = 0.0;  // register floor; not a measured value
    std::size_t packet_bytes = 0;

    void validate() const;
};

// CC2538 (2.4 GHz, 10 pkt/s) and CC1200 (869.5 MHz at 50 kbps, 2 pkt/s).
std::vector<RadioProfile> builtin_profiles();
// Case-insensitive lookup among the built-ins. Throws ValidationError.
RadioProfile find_profile(std::string_view name);

enum class ChannelKind { ar2, swell, ripple };

std::string_view to_string(ChannelKind k) noexcept;
ChannelKind parse_channel_kind(std::string_view name);

struct Oscillation {
    double freq_hz = 0.0;
    double amp_db = 0.0;
    std::optional<double> phase_rad;  // drawn from the seed when unset
};

/// Received-power fluctuation model. The fluctuation is the sum of fixed
/// sinusoids, a stationary AR(2) component and white measurement noise; the
/// kind selects a preset family and labels the output.
///
/// With `ar_step_s == 0` the AR(2) advances once per packet. Otherwise it
/// runs on a fixed internal grid of `ar_step_s` seconds and is sampled at
/// packet times, so its time scale does not depend on the packet rate.
struct ChannelModel {
    ChannelKind kind = ChannelKind::swell;
    std::vector<Oscillation> oscillations;
    double ar_a1 = 0.0;
    double ar_a2 = 0.0;
    double ar_std_db = 0.0;  // stationary standard deviation of the AR(2) part
    double ar_step_s = 0.0;
    double noise_std_db = 0.0;
    double base_path_loss_db = 80.0;
    std::uint64_t seed = 1;

    // Throws ValidationError on unstable AR poles or invalid parameters.
    void validate() const;
};

// Preset channels. Presets are inspired by the character of different water
// bodies; they are calibrations, not measurements.
//  ar2    : per-packet AR(2), poles 0.9 e^{+-j0.3}
//  swell  : slow waves (0.12 / 0.27 Hz) plus a smooth random component
//  ripple : fast low-amplitude oscillation plus noise
ChannelModel preset_channel(ChannelKind kind, std::uint64_t seed);

// AR(2) coefficients of a critically damped smooth process with correlation
// time `corr_s` when stepped every `step_s` seconds (double real pole).
std::pair<double, double> smooth_ar_coefficients(double corr_s, double step_s);

/// Stateful path-gain generator: gain_k = -base_path_loss + fluctuation(t_k).
class ChannelProcess {
public:
    ChannelProcess(ChannelModel model, double rate_pps);

    // Gain (dB) of the next packet slot.
    double next_gain_db();
    double time_s() const noexcept;  // time of the last returned slot
    std::uint64_t packets() const noexcept { return packet_; }

private:
    double advance_ar(double t);
    double draw_ar_innovation();

    ChannelModel model_;
    double rate_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::vector<double> phases_;
    double innovation_std_ = 0.0;
    double ar_prev_ = 0.0;
    double ar_prev2_ = 0.0;
    std::uint64_t ar_steps_ = 0;  // internal grid steps taken
    std::uint64_t packet_ = 0;
};

// One packet per slot at the radio's rate, all sent at `tx_power_dbm`.
// rssi = tx - path loss + fluctuation, quantized to 0.01 dB.
Trace generate_trace(const ChannelModel& channel, const RadioProfile& radio, double tx_power_dbm, std::size_t n_packets);

enum class LossKind { none, bernoulli, gilbert_elliott };

struct LossModel {
    LossKind kind = LossKind::none;
    double p = 0.0;          // bernoulli loss probability
    double p_gb = 0.0;       // good -> bad transition probability
    double p_bg = 0.0;       // bad -> good transition probability
    double loss_good = 0.0;  // loss probability in the good state
    double loss_bad = 1.0;   // loss probability in the bad state
    std::uint64_t seed = 1;

    void validate() const;
    double mean_loss() const noexcept;  // stationary loss ratio
};

// "none", "bernoulli:P", "ge:P_GB,P_BG[,LOSS_GOOD,LOSS_BAD]" (alias gilbert_elliott).
LossModel parse_loss(std::string_view text, std::uint64_t seed);

/// Per-packet loss decisions, deterministic for a seed. The Gilbert-Elliott
/// chain starts in the good state.
class LossProcess {
public:
    explicit LossProcess(LossModel model);
    bool next_lost();

private:
    LossModel model_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    bool bad_ = false;
};

// Drops packets by the loss model; survivors keep their seq, t and rssi.
Trace apply_loss(const Trace& trace, const LossModel& loss);

// Drops packets received below the radio's sensitivity.
Trace apply_reception_gate(const Trace& trace, const RadioProfile& radio);

}  // namespace rssipred::linksim
