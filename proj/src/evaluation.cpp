#include "owdisc/evaluation.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "owdisc/assignment.hpp"
#include "owdisc/errors.hpp"

namespace owdisc {
namespace {

void check_sizes(const PredictionSet& predictions, const Labels& truth) {
  if (predictions.size() != truth.size()) {
    throw ValidationError(std::to_string(predictions.size()) + " predictions for " + std::to_string(truth.size()) +
                          " truth labels");
  }
}

// Hungarian matching that maximizes agreement between predicted ids and truth
// ids over the given samples.
struct Agreement {
  std::size_t hits = 0;
  IdPairs pairs;
  std::map<std::uint32_t, std::size_t> hits_per_truth;
};

Agreement best_agreement(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  const std::set<std::uint32_t> pred_ids(predicted.begin(), predicted.end());
  const std::set<std::uint32_t> truth_ids(truth.begin(), truth.end());
  Agreement out;
  if (pred_ids.empty() || truth_ids.empty()) return out;
  const std::vector<std::uint32_t> pred_list(pred_ids.begin(), pred_ids.end());
  const std::vector<std::uint32_t> truth_list(truth_ids.begin(), truth_ids.end());
  std::map<std::uint32_t, Eigen::Index> pred_index, truth_index;
  for (std::size_t i = 0; i < pred_list.size(); ++i) pred_index[pred_list[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t i = 0; i < truth_list.size(); ++i) truth_index[truth_list[i]] = static_cast<Eigen::Index>(i);

  Eigen::MatrixXd contingency = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pred_list.size()),
                                                      static_cast<Eigen::Index>(truth_list.size()));
  for (std::size_t i = 0; i < predicted.size(); ++i) contingency(pred_index[predicted[i]], truth_index[truth[i]]) += 1.0;

  const AssignmentResult assignment = solve_max_assignment(contingency);
  for (const auto& [r, c] : assignment.mapping) {
    const auto agree = static_cast<std::size_t>(contingency(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    out.pairs.emplace_back(pred_list[r], truth_list[c]);
    out.hits += agree;
    out.hits_per_truth[truth_list[c]] = agree;
  }
  return out;
}

}  // namespace

SeenAccuracy seen_accuracy(const PredictionSet& predictions, const Labels& truth, const ClassCatalog& catalog) {
  check_sizes(predictions, truth);
  SeenAccuracy out;
  std::size_t total = 0, hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= catalog.seen_count) continue;
    auto& counts = out.per_class[truth[i]];
    ++counts.total;
    ++total;
    if (predictions.assignments[i] == truth[i]) {
      ++counts.hits;
      ++hits;
    }
  }
  if (total > 0) out.accuracy = static_cast<double>(hits) / static_cast<double>(total);
  return out;
}

UnseenAccuracy unseen_accuracy(const PredictionSet& predictions, const Labels& truth, const ClassCatalog& catalog) {
  check_sizes(predictions, truth);
  std::vector<std::uint32_t> predicted, actual;
  UnseenAccuracy out;
  std::size_t total = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < catalog.seen_count) continue;
    ++total;
    ++out.per_class[truth[i]].total;
    // Seen predictions on unseen truth are errors and never enter matching.
    if (predictions.assignments[i] < catalog.seen_count) continue;
    predicted.push_back(predictions.assignments[i]);
    actual.push_back(truth[i]);
  }
  if (total == 0) throw ValidationError("unseen accuracy needs at least one sample of an unseen class");
  const Agreement agreement = best_agreement(predicted, actual);
  out.hungarian_map = agreement.pairs;
  for (const auto& [truth_id, hits] : agreement.hits_per_truth) out.per_class[truth_id].hits = hits;
  out.accuracy = static_cast<double>(agreement.hits) / static_cast<double>(total);
  return out;
}

double h_score(double seen, double unseen) {
  const double sum = seen + unseen;
  if (!(sum > 0.0)) return 0.0;
  return 2.0 * seen * unseen / sum;
}

EvalReport evaluate(const PredictionSet& predictions, const Labels& truth, const ClassCatalog& catalog) {
  check_sizes(predictions, truth);
  EvalReport report;
  const SeenAccuracy seen = seen_accuracy(predictions, truth, catalog);
  report.seen_accuracy = seen.accuracy;
  report.per_class = seen.per_class;
  const bool any_unseen =
      std::any_of(truth.begin(), truth.end(), [&](std::uint32_t t) { return t >= catalog.seen_count; });
  if (any_unseen) {
    UnseenAccuracy unseen = unseen_accuracy(predictions, truth, catalog);
    report.unseen_accuracy = unseen.accuracy;
    report.hungarian_map = std::move(unseen.hungarian_map);
    for (const auto& [id, counts] : unseen.per_class) report.per_class[id] = counts;
  }
  if (report.seen_accuracy && report.unseen_accuracy) {
    report.h_score = h_score(*report.seen_accuracy, *report.unseen_accuracy);
  }
  std::set<std::uint32_t> discovered;
  for (auto id : predictions.assignments) {
    if (id >= catalog.seen_count) discovered.insert(id);
  }
  report.discovered_class_count = discovered.size();
  return report;
}

ClusteringAccuracy clustering_accuracy(std::span<const std::uint32_t> clusters, std::span<const std::uint32_t> truth) {
  if (clusters.size() != truth.size()) throw ValidationError("cluster and truth lengths differ");
  if (truth.empty()) throw ValidationError("clustering accuracy needs at least one sample");
  const Agreement agreement = best_agreement(clusters, truth);
  return {static_cast<double>(agreement.hits) / static_cast<double>(truth.size()), agreement.pairs};
}

}  // namespace owdisc
