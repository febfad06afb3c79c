#pragma once

#include <iosfwd>
#include <string>

#include "rssipred/atpc.hpp"
#include "rssipred/evaluate.hpp"
#include "rssipred/predictor.hpp"
#include "rssipred/stats.hpp"

namespace rssipred::report {

// lag_s,acov,acf_norm,n_pairs,d1
void write_acf_csv(const stats::AcfEstimate& acf, std::ostream& out);

// Pretty-printed JSON record of a fitted model.
std::string model_to_json(const predictor::PredictorModel& model);
// Inverse of model_to_json. Throws ValidationError on malformed input.
predictor::PredictorModel model_from_json(const std::string& text);

// lag_steps,lag_s,n_predictions,rmse_db,nrmse_pct,accuracy_pct,analytic_mse_db2,method
void write_eval_csv(const eval::EvalReport& report, std::ostream& out);
std::string eval_to_json(const eval::EvalReport& report);

// seq,tx_dbm,rssi_dbm,delivered,predicted,mode
void write_loop_csv(const atpc::LoopResult& result, std::ostream& out);
std::string loop_summary_to_json(const atpc::LoopSummary& summary, const atpc::AtpcConfig& config);

}  // namespace rssipred::report
