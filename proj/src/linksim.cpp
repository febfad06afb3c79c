#include "rssipred/linksim.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "rssipred/errors.hpp"

namespace rssipred::linksim {

void RadioProfile::validate() const {
    if (!(rate_pps > 0.0)) throw ValidationError(fmt::format("radio {}: rate must be positive", name));
    if (!(min_tx_dbm < max_tx_dbm)) throw ValidationError(fmt::format("radio {}: min_tx must be below max_tx", name));
    if (packet_bytes == 0) throw ValidationError(fmt::format("radio {}: packet size must be positive", name));
}

std::vector<RadioProfile> builtin_profiles() {
    return {
        {.name = "CC2538",
         .rate_pps = 10.0,
         .lag_unit_s = 0.1,
         .sensitivity_dbm = -97.0,
         .max_tx_dbm = 7.0,
         .min_tx_dbm = -24.0,
         .packet_bytes = 128},
        {.name = "CC1200",
         .rate_pps = 2.0,
         .lag_unit_s = 0.5,
         .sensitivity_dbm = -109.0,
         .max_tx_dbm = 16.0,
         .min_tx_dbm = -16.0,
         .packet_bytes = 128},
    };
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ValidationError(fmt::format("bad {} '{}'", what, s));
    }
    return v;
}

bool in_unit_interval(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

RadioProfile find_profile(std::string_view name) {
    const auto key = lower(name);
    for (auto& p : builtin_profiles()) {
        if (lower(p.name) == key) return p;
    }
    throw ValidationError(fmt::format("unknown radio '{}'", name));
}

std::string_view to_string(ChannelKind k) noexcept {
    switch (k) {
        case ChannelKind::ar2: return "ar2";
        case ChannelKind::swell: return "swell";
        case ChannelKind::ripple: return "ripple";
    }
    return "unknown";
}

ChannelKind parse_channel_kind(std::string_view name) {
    const auto key = lower(name);
    if (key == "ar2") return ChannelKind::ar2;
    if (key == "swell") return ChannelKind::swell;
    if (key == "ripple") return ChannelKind::ripple;
    throw ValidationError(fmt::format("unknown channel '{}'", name));
}

void ChannelModel::validate() const {
    // Stationarity triangle for z^2 - a1 z - a2.
    const bool stable = std::abs(ar_a2) < 1.0 && std::abs(ar_a1) < 1.0 - ar_a2;
    if (ar_std_db != 0.0 && !stable) {
        throw ValidationError(fmt::format("unstable AR(2) parameters a1={} a2={}", ar_a1, ar_a2));
    }
    if (ar_std_db < 0.0 || noise_std_db < 0.0 || ar_step_s < 0.0) {
        throw ValidationError("channel standard deviations and step must be non-negative");
    }
    for (const auto& o : oscillations) {
        if (!(o.freq_hz >= 0.0) || !std::isfinite(o.amp_db)) throw ValidationError("invalid oscillation");
    }
    if (!std::isfinite(base_path_loss_db)) throw ValidationError("invalid path loss");
}

std::pair<double, double> smooth_ar_coefficients(double corr_s, double step_s) {
    if (!(corr_s > 0.0) || !(step_s > 0.0)) throw ValidationError("correlation time and step must be positive");
    const double pole = std::exp(-step_s / corr_s);
    return {2.0 * pole, -pole * pole};
}

ChannelModel preset_channel(ChannelKind kind, std::uint64_t seed) {
    ChannelModel m;
    m.kind = kind;
    m.seed = seed;
    switch (kind) {
        case ChannelKind::ar2:
            m.ar_a1 = 2.0 * 0.9 * std::cos(0.3);
            m.ar_a2 = -0.81;
            m.ar_std_db = 3.0;
            m.base_path_loss_db = 80.0;
            break;
        case ChannelKind::swell: {
            m.oscillations = {{0.12, 4.0, std::nullopt}, {0.27, 1.5, std::nullopt}};
            m.ar_step_s = 0.01;
            std::tie(m.ar_a1, m.ar_a2) = smooth_ar_coefficients(1.0, m.ar_step_s);
            m.ar_std_db = 1.0;
            m.noise_std_db = 0.02;
            m.base_path_loss_db = 80.0;
            break;
        }
        case ChannelKind::ripple: {
            m.oscillations = {{1.5, 1.0, std::nullopt}, {2.3, 0.5, std::nullopt}};
            m.ar_step_s = 0.01;
            std::tie(m.ar_a1, m.ar_a2) = smooth_ar_coefficients(0.3, m.ar_step_s);
            m.ar_std_db = 1.0;
            m.noise_std_db = 0.5;
            m.base_path_loss_db = 75.0;
            break;
        }
    }
    return m;
}

ChannelProcess::ChannelProcess(ChannelModel model, double rate_pps)
    : model_(std::move(model)), rate_(rate_pps), rng_(model_.seed) {
    model_.validate();
    if (!(rate_ > 0.0)) throw ValidationError("packet rate must be positive");

    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (const auto& o : model_.oscillations) phases_.push_back(o.phase_rad ? *o.phase_rad : phase(rng_));

    if (model_.ar_std_db > 0.0) {
        const double a1 = model_.ar_a1;
        const double a2 = model_.ar_a2;
        // var(x) = s^2 (1 - a2) / ((1 + a2) ((1 - a2)^2 - a1^2))
        const double gain = (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1));
        innovation_std_ = model_.ar_std_db / std::sqrt(gain);
        // Start from the stationary joint law of two consecutive values.
        const double rho1 = a1 / (1.0 - a2);
        ar_prev2_ = model_.ar_std_db * normal_(rng_);
        ar_prev_ = rho1 * ar_prev2_ + model_.ar_std_db * std::sqrt(std::max(0.0, 1.0 - rho1 * rho1)) * normal_(rng_);
    }
}

double ChannelProcess::draw_ar_innovation() { return innovation_std_ * normal_(rng_); }

double ChannelProcess::advance_ar(double t) {
    if (model_.ar_std_db <= 0.0) return 0.0;
    const auto target = model_.ar_step_s > 0.0 ? static_cast<std::uint64_t>(std::llround(t / model_.ar_step_s)) : packet_;
    while (ar_steps_ < target) {
        const double next = model_.ar_a1 * ar_prev_ + model_.ar_a2 * ar_prev2_ + draw_ar_innovation();
        ar_prev2_ = ar_prev_;
        ar_prev_ = next;
        ++ar_steps_;
    }
    return ar_prev_;
}

double ChannelProcess::next_gain_db() {
    const double t = nominal_time(packet_, 1.0 / rate_);
    double fluct = 0.0;
    for (std::size_t i = 0; i < model_.oscillations.size(); ++i) {
        const auto& o = model_.oscillations[i];
        fluct += o.amp_db * std::sin(2.0 * std::numbers::pi * o.freq_hz * t + phases_[i]);
    }
    fluct += advance_ar(t);
    if (model_.noise_std_db > 0.0) fluct += model_.noise_std_db * normal_(rng_);
    ++packet_;
    return -model_.base_path_loss_db + fluct;
}

double ChannelProcess::time_s() const noexcept {
    return packet_ == 0 ? 0.0 : nominal_time(packet_ - 1, 1.0 / rate_);
}

Trace generate_trace(const ChannelModel& channel, const RadioProfile& radio, double tx_power_dbm, std::size_t n_packets) {
    radio.validate();
    if (n_packets < 1) throw ValidationError("n_packets must be at least 1");
    if (tx_power_dbm < radio.min_tx_dbm || tx_power_dbm > radio.max_tx_dbm) {
        throw ValidationError(fmt::format("tx power {} dBm outside {} limits [{}, {}]", tx_power_dbm, radio.name,
                                          radio.min_tx_dbm, radio.max_tx_dbm));
    }
    ChannelProcess process(channel, radio.rate_pps);
    const double interval = 1.0 / radio.rate_pps;
    std::vector<RssiSample> samples;
    samples.reserve(n_packets);
    for (std::size_t k = 0; k < n_packets; ++k) {
        const double rssi = std::round((tx_power_dbm + process.next_gain_db()) * 100.0) / 100.0;
        samples.push_back({k, nominal_time(k, interval), rssi, tx_power_dbm});
    }
    return Trace(std::move(samples), interval,
                 {{"channel", std::string(to_string(channel.kind))}, {"radio", radio.name},
                  {"seed", std::to_string(channel.seed)}});
}

void LossModel::validate() const {
    const bool ok = in_unit_interval(p) && in_unit_interval(p_gb) && in_unit_interval(p_bg) &&
                    in_unit_interval(loss_good) && in_unit_interval(loss_bad);
    if (!ok) throw ValidationError("loss probabilities must lie in [0, 1]");
}

double LossModel::mean_loss() const noexcept {
    switch (kind) {
        case LossKind::none: return 0.0;
        case LossKind::bernoulli: return p;
        case LossKind::gilbert_elliott: {
            const double total = p_gb + p_bg;
            const double pi_bad = total > 0.0 ? p_gb / total : 0.0;
            return (1.0 - pi_bad) * loss_good + pi_bad * loss_bad;
        }
    }
    return 0.0;
}

LossModel parse_loss(std::string_view text, std::uint64_t seed) {
    LossModel m;
    m.seed = seed;
    const auto colon = text.find(':');
    const auto kind = lower(text.substr(0, colon));
    std::vector<double> args;
    if (colon != std::string_view::npos) {
        auto rest = text.substr(colon + 1);
        while (true) {
            const auto comma = rest.find(',');
            args.push_back(parse_double(rest.substr(0, comma), "loss parameter"));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
    }
    if (kind == "none" && args.empty()) {
        m.kind = LossKind::none;
    } else if (kind == "bernoulli" && args.size() == 1) {
        m.kind = LossKind::bernoulli;
        m.p = args[0];
    } else if ((kind == "ge" || kind == "gilbert_elliott") && (args.size() == 2 || args.size() == 4)) {
        m.kind = LossKind::gilbert_elliott;
        m.p_gb = args[0];
        m.p_bg = args[1];
        if (args.size() == 4) {
            m.loss_good = args[2];
            m.loss_bad = args[3];
        }
    } else {
        throw ValidationError(fmt::format("bad loss model '{}'", text));
    }
    m.validate();
    return m;
}

LossProcess::LossProcess(LossModel model) : model_(model), rng_(model.seed) { model_.validate(); }

bool LossProcess::next_lost() {
    switch (model_.kind) {
        case LossKind::none: return false;
        case LossKind::bernoulli: return uniform_(rng_) < model_.p;
        case LossKind::gilbert_elliott: {
            const bool lost = uniform_(rng_) < (bad_ ? model_.loss_bad : model_.loss_good);
            const double flip = bad_ ? model_.p_bg : model_.p_gb;
            if (uniform_(rng_) < flip) bad_ = !bad_;
            return lost;
        }
    }
    return false;
}

Trace apply_loss(const Trace& trace, const LossModel& loss) {
    LossProcess process(loss);
    std::vector<RssiSample> kept;
    kept.reserve(trace.size());
    for (const auto& s : trace.samples()) {
        if (!process.next_lost()) kept.push_back(s);
    }
    return Trace(std::move(kept), trace.nominal_interval(), trace.meta());
}

Trace apply_reception_gate(const Trace& trace, const RadioProfile& radio) {
    std::vector<RssiSample> kept;
    kept.reserve(trace.size());
    for (const auto& s : trace.samples()) {
        if (s.rssi >= radio.sensitivity_dbm) kept.push_back(s);
    }
    return Trace(std::move(kept), trace.nominal_interval(), trace.meta());
}

}  // namespace rssipred::linksim
