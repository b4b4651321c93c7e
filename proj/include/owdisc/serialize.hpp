#pragma once

#include <filesystem>

#include <json.hpp>

#include "owdisc/evaluation.hpp"
#include "owdisc/finetune.hpp"
#include "owdisc/matching.hpp"
#include "owdisc/pipeline.hpp"

namespace owdisc {

void to_json(nlohmann::json& out, const ClassCounts& counts);
void to_json(nlohmann::json& out, const EvalReport& report);
void to_json(nlohmann::json& out, const TrainLogEntry& entry);
void to_json(nlohmann::json& out, const DistributionHistogram& histogram);
void to_json(nlohmann::json& out, const MatchResult& match);
void to_json(nlohmann::json& out, const MatchSummary& summary);
void to_json(nlohmann::json& out, const EstimateResult& estimate);
void to_json(nlohmann::json& out, const RunReport& report);

EvalReport eval_report_from_json(const nlohmann::json& in);

// One JSON object per line: step, L_s, L_reg, total.
std::string training_log_jsonl(const std::vector<TrainLogEntry>& log);

// Writes classifier.cef (+ sidecar) and model.json into `dir`. Adapter weights
// are not unit norm, so they live in model.json rather than in CEF.
void save_model(const DiscoveryModel& model, const std::filesystem::path& dir);
DiscoveryModel load_model(const std::filesystem::path& dir);

}  // namespace owdisc
