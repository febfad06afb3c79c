#include "rssipred/report.hpp"

#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "rssipred/errors.hpp"

namespace rssipred::report {

using nlohmann::ordered_json;

void write_acf_csv(const stats::AcfEstimate& acf, std::ostream& out) {
    out << "lag_s,acov,acf_norm,n_pairs,d1\n";
    for (std::size_t k = 0; k < acf.lags.size(); ++k) {
        out << fmt::format("{:.6f},{:.9f},{:.9f},{},{:.9f}\n", acf.lag_seconds(k), acf.values[k], acf.normalized[k],
                           acf.n_pairs[k], acf.d1[k]);
    }
}

namespace {

ordered_json optional_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json moments_json(const stats::MomentSet& m) {
    return {{"rr0", m.rr0},       {"rpr0", m.rpr0},           {"rprp0", m.rprp0},
            {"rr_tau", m.rr_tau}, {"rrp_tau", m.rrp_tau},     {"rr_target0", m.rr_target0},
            {"tau_s", m.tau},     {"lag_steps", m.lag_steps}, {"n", m.n},
            {"mean_removed", m.mean_removed}, {"mean_r", m.mean_r}, {"mean_rp", m.mean_rp},
            {"mean_target", m.mean_target}};
}

stats::MomentSet moments_from_json(const ordered_json& j) {
    stats::MomentSet m;
    m.rr0 = j.at("rr0").get<double>();
    m.rpr0 = j.at("rpr0").get<double>();
    m.rprp0 = j.at("rprp0").get<double>();
    m.rr_tau = j.at("rr_tau").get<double>();
    m.rrp_tau = j.at("rrp_tau").get<double>();
    m.rr_target0 = j.at("rr_target0").get<double>();
    m.tau = j.at("tau_s").get<double>();
    m.lag_steps = j.at("lag_steps").get<std::size_t>();
    m.n = j.at("n").get<std::size_t>();
    m.mean_removed = j.at("mean_removed").get<bool>();
    m.mean_r = j.at("mean_r").get<double>();
    m.mean_rp = j.at("mean_rp").get<double>();
    m.mean_target = j.at("mean_target").get<double>();
    return m;
}

}  // namespace

std::string model_to_json(const predictor::PredictorModel& model) {
    ordered_json j;
    j["method"] = predictor::to_string(model.method);
    j["tau_s"] = model.tau;
    j["interval_s"] = model.interval;
    j["rho_r"] = model.rho_r;
    j["rho_rp"] = model.rho_rp;
    if (model.basis) {
        const auto& b = *model.basis;
        j["basis"] = {{"rho11", b.rho11}, {"rho21", b.rho21}, {"rho22", b.rho22}, {"pi1", b.pi1}, {"pi2", b.pi2}};
    } else {
        j["basis"] = nullptr;
    }
    j["mean_r_dbm"] = model.mean_r;
    j["mean_rp_db_per_s"] = model.mean_rp;
    j["mean_target_dbm"] = model.mean_target;
    j["analytic_mse_db2"] = optional_number(model.analytic_mse);
    j["moments"] = model.source_moments ? moments_json(*model.source_moments) : ordered_json(nullptr);
    return j.dump(2) + "\n";
}

predictor::PredictorModel model_from_json(const std::string& text) {
    try {
        const auto j = ordered_json::parse(text);
        predictor::PredictorModel m;
        m.method = predictor::parse_method(j.at("method").get<std::string>());
        m.tau = j.at("tau_s").get<double>();
        m.interval = j.value("interval_s", 0.0);
        m.rho_r = j.at("rho_r").get<double>();
        m.rho_rp = j.at("rho_rp").get<double>();
        if (j.contains("basis") && !j["basis"].is_null()) {
            const auto& b = j["basis"];
            m.basis = predictor::OrthonormalBasis{b.at("rho11").get<double>(), b.at("rho21").get<double>(),
                                                  b.at("rho22").get<double>(), b.at("pi1").get<double>(),
                                                  b.at("pi2").get<double>()};
        }
        m.mean_r = j.value("mean_r_dbm", 0.0);
        m.mean_rp = j.value("mean_rp_db_per_s", 0.0);
        m.mean_target = j.value("mean_target_dbm", 0.0);
        if (j.contains("analytic_mse_db2") && !j["analytic_mse_db2"].is_null()) {
            m.analytic_mse = j["analytic_mse_db2"].get<double>();
        }
        if (j.contains("moments") && !j["moments"].is_null()) m.source_moments = moments_from_json(j["moments"]);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed model JSON: ") + e.what());
    }
}

void write_eval_csv(const eval::EvalReport& report, std::ostream& out) {
    out << "lag_steps,lag_s,n_predictions,rmse_db,nrmse_pct,accuracy_pct,analytic_mse_db2,method\n";
    for (const auto& r : report.rows) {
        out << fmt::format("{},{:.6f},{},{:.6f},{:.6f},{:.6f},", r.lag_steps, r.lag_s, r.n_predictions, r.rmse_db,
                           r.nrmse_pct, r.accuracy_pct);
        if (r.analytic_mse_db2) out << fmt::format("{:.6f}", *r.analytic_mse_db2);
        out << ',' << predictor::to_string(r.method) << '\n';
    }
}

std::string eval_to_json(const eval::EvalReport& report) {
    ordered_json j;
    ordered_json meta = ordered_json::object();
    for (const auto& [k, v] : report.meta) meta[k] = v;
    j["trace"] = {{"meta", meta}, {"n_samples", report.n_samples}, {"loss_ratio", report.loss_ratio}};
    j["normalization"] = {{"r_max_dbm", report.r_max_dbm},
                          {"r_min_dbm", report.r_min_dbm},
                          {"definition", "nrmse_pct = 100 * rmse_db / (r_max_dbm - r_min_dbm); accuracy_pct = 100 - nrmse_pct"}};
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"lag_steps", r.lag_steps},
                        {"lag_s", r.lag_s},
                        {"n_predictions", r.n_predictions},
                        {"rmse_db", r.rmse_db},
                        {"nrmse_pct", r.nrmse_pct},
                        {"accuracy_pct", r.accuracy_pct},
                        {"analytic_mse_db2", optional_number(r.analytic_mse_db2)},
                        {"method", predictor::to_string(r.method)}});
    }
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

void write_loop_csv(const atpc::LoopResult& result, std::ostream& out) {
    out << "seq,tx_dbm,rssi_dbm,delivered,predicted,mode\n";
    for (const auto& p : result.packets) {
        out << fmt::format("{},{:.2f},{:.2f},{},", p.seq, p.tx_dbm, p.rssi_dbm, p.delivered ? 1 : 0);
        if (p.predicted_dbm) out << fmt::format("{:.2f}", *p.predicted_dbm);
        out << ',' << atpc::to_string(p.mode) << '\n';
    }
}

std::string loop_summary_to_json(const atpc::LoopSummary& s, const atpc::AtpcConfig& config) {
    ordered_json j = {{"radio", config.radio.name},
                      {"threshold_dbm", config.threshold_dbm},
                      {"margin_db", config.margin_db},
                      {"max_missed_acks", config.max_missed_acks},
                      {"predictor", predictor::to_string(config.predictor_method)},
                      {"packets", s.packets},
                      {"delivered", s.delivered},
                      {"delivered_above_threshold", s.delivered_above_threshold},
                      {"fraction_above_threshold", s.fraction_above_threshold},
                      {"mean_tx_dbm", s.mean_tx_dbm},
                      {"fallback_packets", s.fallback_packets}};
    return j.dump(2) + "\n";
}

}  // namespace rssipred::report
