// rssipred: command-line front end for trace ingestion, simulation, predictor
// fitting, walk-forward evaluation and the closed power-control loop.
//
// Exit codes: 0 success, 1 validation error, 2 I/O error.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rssipred/atpc.hpp"
#include "rssipred/errors.hpp"
#include "rssipred/evaluate.hpp"
#include "rssipred/linksim.hpp"
#include "rssipred/predictor.hpp"
#include "rssipred/report.hpp"
#include "rssipred/stats.hpp"
#include "rssipred/trace.hpp"

namespace {

using namespace rssipred;

constexpr std::uint64_t kLossSeedSalt = 0x9E3779B97F4A7C15ULL;

// Writes to the named file, or stdout when the name is empty.
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    fn(out);
    if (!out) throw IoError("write failed for " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Trace load_trace(const std::string& path, double interval) {
    auto result = ingest_csv(path, interval);
    if (result.rejected > 0) std::cerr << fmt::format("warning: {} row(s) rejected (rssi outside window)\n", result.rejected);
    if (result.duplicates > 0) std::cerr << fmt::format("warning: {} duplicate seq row(s), last kept\n", result.duplicates);
    return std::move(result.trace);
}

std::vector<std::size_t> parse_lags(const std::string& text) {
    std::vector<std::size_t> lags;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            const long v = std::stol(item, &pos);
            if (pos != item.size() || v < 1) throw std::invalid_argument(item);
            lags.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ValidationError(fmt::format("bad lag '{}'", item));
        }
    }
    if (lags.empty()) throw ValidationError("no lags given");
    return lags;
}

// Flat "key = value" config file; '#' starts a comment. Each pair becomes
// "--key value" placed before the command-line flags, which therefore win.
std::vector<std::string> config_args(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::vector<std::string> args;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(line_no, "expected key = value in " + path);
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "empty key in " + path);
        args.push_back("--" + key);
        args.push_back(value);
    }
    return args;
}

struct ChannelFlags {
    std::string channel = "swell";
    std::string radio = "cc2538";
    std::uint64_t seed = 1;
    std::optional<double> path_loss;
    std::optional<double> noise_std;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--channel", channel, "Channel preset: swell, ripple, ar2")->capture_default_str();
        cmd->add_option("--radio", radio, "Radio profile: cc2538, cc1200")->capture_default_str();
        cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
        cmd->add_option("--path-loss", path_loss, "Override the preset's base path loss (dB)");
        cmd->add_option("--noise-std", noise_std, "Override the preset's measurement noise std (dB)");
    }

    linksim::ChannelModel model() const {
        auto m = linksim::preset_channel(linksim::parse_channel_kind(channel), seed);
        if (path_loss) m.base_path_loss_db = *path_loss;
        if (noise_std) m.noise_std_db = *noise_std;
        return m;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"Received-power prediction and adaptive transmit power toolkit"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string config_path;
    app.add_option("--config", config_path, "Flat key = value file mirroring subcommand flags");

    // acf
    auto* acf_cmd = app.add_subcommand("acf", "Sample autocovariance of a trace as CSV");
    std::string acf_in, acf_out;
    double acf_interval = 0.1;
    std::size_t acf_max_lag = 25, acf_min_pairs = stats::kDefaultMinPairs;
    acf_cmd->add_option("--in", acf_in, "Trace CSV")->required();
    acf_cmd->add_option("--interval", acf_interval, "Seconds between sequence numbers")->capture_default_str();
    acf_cmd->add_option("--max-lag", acf_max_lag, "Largest lag in steps")->capture_default_str();
    acf_cmd->add_option("--min-pairs", acf_min_pairs, "Minimum pairs per lag")->capture_default_str();
    acf_cmd->add_option("--out", acf_out, "Output CSV (default stdout)");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic trace");
    ChannelFlags sim_channel;
    sim_channel.add_to(sim_cmd);
    std::size_t sim_packets = 2000;
    std::string sim_loss = "none", sim_out;
    std::optional<double> sim_tx;
    sim_cmd->add_option("--packets", sim_packets, "Packets to send")->capture_default_str();
    sim_cmd->add_option("--loss", sim_loss, "none | bernoulli:P | ge:P_GB,P_BG[,LOSS_GOOD,LOSS_BAD]")->capture_default_str();
    sim_cmd->add_option("--tx", sim_tx, "Transmit power in dBm (default: radio maximum)");
    sim_cmd->add_option("--out", sim_out, "Output trace CSV (default stdout)");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit a predictor on a whole trace");
    std::string fit_in, fit_out, fit_method = "orthonormal";
    double fit_interval = 0.1;
    std::size_t fit_lag = 1, fit_min_pairs = stats::kDefaultMinPairs;
    fit_cmd->add_option("--in", fit_in, "Trace CSV")->required();
    fit_cmd->add_option("--interval", fit_interval, "Seconds between sequence numbers")->capture_default_str();
    fit_cmd->add_option("--method", fit_method, "normal_eq | orthonormal | simplified")->capture_default_str();
    fit_cmd->add_option("--lag", fit_lag, "Prediction lag in steps")->capture_default_str();
    fit_cmd->add_option("--min-pairs", fit_min_pairs, "Minimum fitting support")->capture_default_str();
    fit_cmd->add_option("--out", fit_out, "Output model JSON (default stdout)");

    // predict
    auto* pred_cmd = app.add_subcommand("predict", "Predict from a fitted model and an anchor sample");
    std::string pred_model, pred_out;
    double pred_rssi = 0.0, pred_slope = 0.0;
    std::size_t pred_steps = 1;
    std::optional<double> pred_interval;
    pred_cmd->add_option("--model", pred_model, "Model JSON")->required();
    pred_cmd->add_option("--anchor-rssi", pred_rssi, "Anchor RSSI (dBm)")->required();
    pred_cmd->add_option("--anchor-slope", pred_slope, "Anchor slope (dB/s)")->required();
    pred_cmd->add_option("--steps", pred_steps, "Steps ahead")->capture_default_str();
    pred_cmd->add_option("--interval", pred_interval, "Seconds per step (default: from the model)");
    pred_cmd->add_option("--out", pred_out, "Output JSON (default stdout)");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Walk-forward RMSE per lag");
    std::string eval_in, eval_method = "orthonormal", eval_lags = "1,2,3", eval_out = "eval";
    double eval_interval = 0.1;
    std::optional<std::size_t> eval_max_lag;
    eval::EvalConfig eval_cfg;
    eval_cmd->add_option("--in", eval_in, "Trace CSV")->required();
    eval_cmd->add_option("--interval", eval_interval, "Seconds between sequence numbers")->capture_default_str();
    eval_cmd->add_option("--method", eval_method, "normal_eq | orthonormal | simplified")->capture_default_str();
    eval_cmd->add_option("--lags", eval_lags, "Comma-separated lags in steps")->capture_default_str();
    eval_cmd->add_option("--max-lag", eval_max_lag, "Sweep lags 1..N instead of --lags");
    eval_cmd->add_option("--window", eval_cfg.refit.window, "Refit window (samples)")->capture_default_str();
    eval_cmd->add_option("--refit-every", eval_cfg.refit.refit_every, "Samples between refits")->capture_default_str();
    eval_cmd->add_option("--warmup", eval_cfg.warmup, "Unscored leading samples")->capture_default_str();
    eval_cmd->add_option("--out", eval_out, "Output prefix: writes PREFIX.csv and PREFIX.json")->capture_default_str();

    // atpc
    auto* atpc_cmd = app.add_subcommand("atpc", "Run the closed power-control loop on a simulated link");
    ChannelFlags atpc_channel;
    atpc_channel.add_to(atpc_cmd);
    double atpc_threshold = -90.0, atpc_margin = 3.0;
    std::size_t atpc_max_missed = 5, atpc_packets = 3000;
    std::string atpc_loss = "bernoulli:0.3", atpc_predictor = "orthonormal", atpc_policy = "adaptive", atpc_out,
                atpc_summary;
    atpc_cmd->add_option("--threshold", atpc_threshold, "Receiver-side floor (dBm)")->capture_default_str();
    atpc_cmd->add_option("--margin", atpc_margin, "Headroom above the floor (dB)")->capture_default_str();
    atpc_cmd->add_option("--max-missed", atpc_max_missed, "Lost ACKs bridged before falling back")->capture_default_str();
    atpc_cmd->add_option("--packets", atpc_packets, "Packets to send")->capture_default_str();
    atpc_cmd->add_option("--loss", atpc_loss, "Loss model of the round trip")->capture_default_str();
    atpc_cmd->add_option("--predictor", atpc_predictor, "orthonormal | simplified")->capture_default_str();
    atpc_cmd->add_option("--policy", atpc_policy, "adaptive | always_max")->capture_default_str();
    atpc_cmd->add_option("--out", atpc_out, "Per-packet CSV (default stdout)");
    atpc_cmd->add_option("--summary", atpc_summary, "Summary JSON file");

    // Splice config-file flags in right after the subcommand name.
    std::vector<std::string> args(argv + 1, argv + argc);
    // --config may appear anywhere; it is consumed here rather than by CLI11.
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
            break;
        }
        if (args[i].starts_with("--config=")) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<long>(i));
            break;
        }
    }
    if (!config_path.empty()) {
        auto extra = config_args(config_path);
        auto sub = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
            return a == "acf" || a == "simulate" || a == "fit" || a == "predict" || a == "evaluate" || a == "atpc";
        });
        if (sub != args.end()) args.insert(sub + 1, extra.begin(), extra.end());
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*acf_cmd) {
        const auto trace = load_trace(acf_in, acf_interval);
        const auto acf = stats::sample_acf(trace, acf_max_lag, acf_min_pairs);
        with_output(acf_out, [&](std::ostream& out) { report::write_acf_csv(acf, out); });
    } else if (*sim_cmd) {
        const auto radio = linksim::find_profile(sim_channel.radio);
        const auto channel = sim_channel.model();
        auto trace = linksim::generate_trace(channel, radio, sim_tx.value_or(radio.max_tx_dbm), sim_packets);
        trace = linksim::apply_reception_gate(trace, radio);
        trace = linksim::apply_loss(trace, linksim::parse_loss(sim_loss, sim_channel.seed ^ kLossSeedSalt));
        with_output(sim_out, [&](std::ostream& out) { export_csv(trace, out); });
    } else if (*fit_cmd) {
        const auto trace = load_trace(fit_in, fit_interval);
        const auto method = predictor::parse_method(fit_method);
        const double tau = static_cast<double>(fit_lag) * fit_interval;
        const auto deriv = derivative_series(trace);
        const auto moments = stats::moment_set(trace, deriv, tau, {.min_pairs = fit_min_pairs, .mean_removed = true});
        const auto model = predictor::fit(method, moments);
        with_output(fit_out, [&](std::ostream& out) { out << report::model_to_json(model); });
    } else if (*pred_cmd) {
        const auto model = report::model_from_json(read_file(pred_model));
        const double interval = pred_interval.value_or(model.interval);
        const auto p = predictor::predict(model, {0.0, pred_rssi, pred_slope}, pred_steps, interval);
        with_output(pred_out, [&](std::ostream& out) {
            out << fmt::format("{{\n  \"steps_ahead\": {},\n  \"tau_s\": {:.6f},\n  \"value_dbm\": {:.6f},\n  \"mse_db2\": {}\n}}\n",
                               p.steps_ahead, p.t_target, p.value, p.mse ? fmt::format("{:.6f}", *p.mse) : "null");
        });
    } else if (*eval_cmd) {
        const auto trace = load_trace(eval_in, eval_interval);
        const auto method = predictor::parse_method(eval_method);
        const auto rep = eval_max_lag ? eval::lag_sweep(trace, method, *eval_max_lag, eval_cfg)
                                      : eval::evaluate(trace, method, parse_lags(eval_lags), eval_cfg);
        with_output(eval_out + ".csv", [&](std::ostream& out) { report::write_eval_csv(rep, out); });
        with_output(eval_out + ".json", [&](std::ostream& out) { out << report::eval_to_json(rep); });
        report::write_eval_csv(rep, std::cout);
    } else if (*atpc_cmd) {
        atpc::AtpcConfig cfg;
        cfg.radio = linksim::find_profile(atpc_channel.radio);
        cfg.threshold_dbm = atpc_threshold;
        cfg.margin_db = atpc_margin;
        cfg.max_missed_acks = atpc_max_missed;
        cfg.predictor_method = predictor::parse_method(atpc_predictor);
        atpc::Policy policy;
        if (atpc_policy == "adaptive") policy = atpc::Policy::adaptive;
        else if (atpc_policy == "always_max") policy = atpc::Policy::always_max;
        else throw ValidationError("unknown policy '" + atpc_policy + "'");
        const auto loss = linksim::parse_loss(atpc_loss, atpc_channel.seed ^ kLossSeedSalt);
        const auto result = atpc::run_closed_loop(cfg, atpc_channel.model(), loss, atpc_packets, policy);
        with_output(atpc_out, [&](std::ostream& out) { report::write_loop_csv(result, out); });
        if (!atpc_summary.empty()) {
            with_output(atpc_summary, [&](std::ostream& out) { out << report::loop_summary_to_json(result.summary, cfg); });
        }
        const auto& s = result.summary;
        std::cerr << fmt::format("delivered {}/{}; {:.2f}% of delivered at or above {} dBm; mean tx {:.2f} dBm\n",
                                 s.delivered, s.packets, 100.0 * s.fraction_above_threshold, cfg.threshold_dbm,
                                 s.mean_tx_dbm);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const rssipred::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
