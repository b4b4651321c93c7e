#include "owdisc/serialize.hpp"

#include <sstream>
#include <string>

#include "owdisc/errors.hpp"
#include "owdisc/io.hpp"

namespace owdisc {
namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& value) { return value ? json(*value) : json(nullptr); }

std::optional<double> number_or_null(const json& value) {
  if (value.is_null()) return std::nullopt;
  return value.get<double>();
}

json id_pairs(const IdPairs& pairs) {
  json out = json::array();
  for (const auto& [a, b] : pairs) out.push_back({a, b});
  return out;
}

json per_class(const std::map<std::uint32_t, ClassCounts>& counts) {
  json out = json::object();
  for (const auto& [id, c] : counts) out[std::to_string(id)] = c;
  return out;
}

template <typename Matrix>
json matrix_rows(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if constexpr (std::is_same_v<typename Matrix::Scalar, std::uint8_t>) {
        row.push_back(static_cast<int>(m(i, j)));
      } else {
        row.push_back(m(i, j));
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

void to_json(json& out, const ClassCounts& counts) { out = {{"total", counts.total}, {"hits", counts.hits}}; }

void to_json(json& out, const EvalReport& report) {
  out = {{"seen_accuracy", optional_number(report.seen_accuracy)},
         {"unseen_accuracy", optional_number(report.unseen_accuracy)},
         {"h_score", optional_number(report.h_score)},
         {"discovered_class_count", report.discovered_class_count},
         {"hungarian_map", id_pairs(report.hungarian_map)},
         {"per_class", per_class(report.per_class)}};
}

EvalReport eval_report_from_json(const json& in) {
  try {
    EvalReport report;
    report.seen_accuracy = number_or_null(in.at("seen_accuracy"));
    report.unseen_accuracy = number_or_null(in.at("unseen_accuracy"));
    report.h_score = number_or_null(in.at("h_score"));
    report.discovered_class_count = in.at("discovered_class_count").get<std::size_t>();
    for (const auto& pair : in.at("hungarian_map")) {
      report.hungarian_map.emplace_back(pair.at(0).get<std::uint32_t>(), pair.at(1).get<std::uint32_t>());
    }
    for (const auto& [id, c] : in.at("per_class").items()) {
      report.per_class[static_cast<std::uint32_t>(std::stoul(id))] =
          ClassCounts{c.at("total").get<std::size_t>(), c.at("hits").get<std::size_t>()};
    }
    return report;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed eval report: ") + e.what());
  }
}

void to_json(json& out, const TrainLogEntry& entry) {
  out = {{"step", entry.step}, {"L_s", entry.loss_supervised}, {"L_reg", entry.loss_reg}, {"total", entry.total}};
}

void to_json(json& out, const DistributionHistogram& histogram) {
  out = {{"bins", histogram.bins}, {"below_0_02", histogram.below_0_02}, {"above_0_98", histogram.above_0_98}};
}

void to_json(json& out, const MatchResult& match) {
  out = {{"prototype_count", match.prototype_count()},
         {"matched_count", match.matched_count()},
         {"cooccurrence", matrix_rows(match.cooccurrence)},
         {"distribution", matrix_rows(match.distribution)},
         {"matches", matrix_rows(match.matches)},
         {"unseen_prototype_indices", match.unseen_prototype_indices},
         {"class_to_prototypes", match.class_to_prototypes},
         {"distribution_histogram", distribution_histogram(match.distribution)}};
}

void to_json(json& out, const MatchSummary& summary) {
  out = {{"prototype_count", summary.prototype_count},
         {"matched_count", summary.matched_count},
         {"unseen_count", summary.unseen_count},
         {"unseen_prototype_indices", summary.unseen_prototype_indices},
         {"class_to_prototypes", summary.class_to_prototypes},
         {"distribution_histogram", summary.histogram}};
}

void to_json(json& out, const EstimateResult& estimate) {
  json scores = json::array();
  for (const auto& [k, score] : estimate.scores) scores.push_back({{"k", k}, {"score", score}});
  out = {{"k", estimate.k}, {"mode", std::string(to_string(estimate.mode))}, {"scores", std::move(scores)}};
}

void to_json(json& out, const RunReport& report) {
  out = {{"method", report.method},
         {"config", report.config},
         {"seen_count", report.seen_count},
         {"target_class_count", report.target_class_count}};
  if (report.estimate) out["estimate"] = *report.estimate;
  if (report.match) out["match"] = *report.match;
  if (report.simple) {
    out["simple"] = {{"entropy_threshold", report.simple->entropy_threshold},
                     {"marked_unseen", report.simple->marked_unseen},
                     {"novel_clusters", report.simple->novel_clusters}};
  }
  json training = {{"steps", report.training_log.size()}};
  if (!report.training_log.empty()) {
    training["first"] = report.training_log.front();
    training["last"] = report.training_log.back();
  }
  out["training"] = std::move(training);
  out["eval_before_finetune"] = report.eval_before_finetune ? json(*report.eval_before_finetune) : json(nullptr);
  out["eval"] = report.eval ? json(*report.eval) : json(nullptr);
  json timings = json::array();
  for (const auto& t : report.timings) timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  out["timings"] = std::move(timings);
}

std::string training_log_jsonl(const std::vector<TrainLogEntry>& log) {
  std::ostringstream out;
  for (const auto& entry : log) out << json(entry).dump() << '\n';
  return out.str();
}

void save_model(const DiscoveryModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_prototypes(model.classifier, dir / "classifier.cef");
  json weights = json::array();
  const auto& w = model.adapter.weights;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) weights.push_back(w(i, j));
  }
  const json meta = {{"seen_count", model.seen_count},
                     {"temperature", model.temperature},
                     {"lambda", model.lambda},
                     {"lr_head", model.lr_head},
                     {"lr_adapter", model.lr_adapter},
                     {"steps_taken", model.steps_taken},
                     {"seed", model.seed},
                     {"adapter", {{"kind", std::string(to_string(model.adapter.kind))},
                                  {"rows", w.rows()},
                                  {"cols", w.cols()},
                                  {"weights", std::move(weights)}}}};
  write_text_file(dir / "model.json", meta.dump(2) + "\n");
}

DiscoveryModel load_model(const std::filesystem::path& dir) {
  json meta;
  try {
    meta = json::parse(read_text_file(dir / "model.json"));
  } catch (const json::exception& e) {
    throw FormatError((dir / "model.json").string() + ": " + e.what());
  }
  try {
    DiscoveryModel model;
    model.classifier = load_prototypes(dir / "classifier.cef");
    model.seen_count = meta.at("seen_count").get<std::size_t>();
    model.temperature = meta.at("temperature").get<double>();
    model.lambda = meta.at("lambda").get<double>();
    model.lr_head = meta.at("lr_head").get<double>();
    model.lr_adapter = meta.at("lr_adapter").get<double>();
    model.steps_taken = meta.at("steps_taken").get<std::size_t>();
    model.seed = meta.at("seed").get<std::uint64_t>();
    const json& adapter = meta.at("adapter");
    model.adapter.kind = parse_adapter_kind(adapter.at("kind").get<std::string>());
    const auto rows = adapter.at("rows").get<Eigen::Index>();
    const auto cols = adapter.at("cols").get<Eigen::Index>();
    const json& weights = adapter.at("weights");
    if (static_cast<Eigen::Index>(weights.size()) != rows * cols) {
      throw FormatError("adapter has " + std::to_string(weights.size()) + " weights, expected " +
                        std::to_string(rows * cols));
    }
    model.adapter.weights.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) model.adapter.weights(i, j) = weights[i * cols + j].get<float>();
    }
    if (model.seen_count > model.classifier.count()) {
      throw FormatError("seen_count exceeds the classifier's column count");
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError((dir / "model.json").string() + ": " + e.what());
  }
}

}  // namespace owdisc
