#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "owdisc/config.hpp"
#include "owdisc/embedding.hpp"
#include "owdisc/evaluation.hpp"
#include "owdisc/finetune.hpp"
#include "owdisc/matching.hpp"
#include "owdisc/prototype_bank.hpp"

namespace owdisc {

enum class EstimateMode { Union, TargetOnly };

std::string_view to_string(EstimateMode mode);
EstimateMode parse_estimate_mode(std::string_view text);

struct EstimateRange {
  std::size_t k_min = 0;
  std::size_t k_max = 0;
  EstimateMode mode = EstimateMode::Union;
};

// Either the known number of target classes or a grid to estimate it over.
using ClassCountSpec = std::variant<std::size_t, EstimateRange>;

struct EstimateResult {
  std::size_t k = 0;
  EstimateMode mode = EstimateMode::Union;
  std::vector<std::pair<std::size_t, double>> scores;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct MatchSummary {
  std::size_t prototype_count = 0;
  std::size_t matched_count = 0;
  std::size_t unseen_count = 0;
  std::vector<std::size_t> unseen_prototype_indices;
  std::vector<std::vector<std::size_t>> class_to_prototypes;
  DistributionHistogram histogram;
};

struct SimpleSummary {
  double entropy_threshold = 0.0;
  std::size_t marked_unseen = 0;
  std::size_t novel_clusters = 0;
};

struct RunReport {
  std::string method;
  DiscoveryConfig config;
  std::size_t seen_count = 0;
  std::size_t target_class_count = 0;
  std::optional<EstimateResult> estimate;
  std::optional<MatchSummary> match;
  std::optional<SimpleSummary> simple;
  std::vector<TrainLogEntry> training_log;
  std::optional<EvalReport> eval_before_finetune;
  std::optional<EvalReport> eval;
  std::vector<StageTiming> timings;
};

struct DiscoveryRun {
  PredictionSet predictions;
  RunReport report;
  PrototypeBank seen_prototypes;
  PrototypeBank target_prototypes;
  MatchResult match;
  DiscoveryModel initial_model;
  DiscoveryModel final_model;
};

/// Cluster-then-match discovery.
///
/// Stages run strictly in order: seen prototypes, target K-means prototypes,
/// co-occurrence, column softmax, thresholding, split, classifier assembly,
/// fine-tuning, argmax prediction. `truth` (empty = absent) only feeds the
/// evaluation in the report.
DiscoveryRun crow_discover(const EmbeddingSet& source, const EmbeddingSet& target, const ClassCountSpec& classes,
                           const DiscoveryConfig& config, std::span<const std::uint32_t> truth = {});

// Resumes discovery from already computed prototype banks.
DiscoveryRun discover_from_prototypes(const EmbeddingSet& source, const EmbeddingSet& target,
                                      const PrototypeBank& seen_prototypes, const PrototypeBank& target_prototypes,
                                      const DiscoveryConfig& config, std::span<const std::uint32_t> truth = {});

struct BaselineRun {
  PredictionSet predictions;
  RunReport report;
};

/// Match-then-cluster baseline: a frozen-feature classifier flags samples
/// whose prediction entropy exceeds the threshold as unseen, K-means with
/// K = |C_t| - |C_s| clusters them, and the resulting classifier is
/// fine-tuned with the same objective (adapter disabled).
BaselineRun simple_baseline(const EmbeddingSet& source, const EmbeddingSet& target, std::size_t target_class_count,
                            const DiscoveryConfig& config, double entropy_threshold,
                            std::span<const std::uint32_t> truth = {});

// Nine evenly spaced thresholds in (0, ln |C_s|).
std::vector<double> simple_threshold_grid(std::size_t seen_count);

struct KMeansBaselineResult {
  std::vector<std::uint32_t> clusters;
  ClusteringAccuracy accuracy;
};

// Plain K-means on the target scored by Hungarian clustering accuracy over
// all classes.
KMeansBaselineResult kmeans_baseline(const EmbeddingSet& target, std::size_t k, std::span<const std::uint32_t> truth,
                                     const DiscoveryConfig& config);

/// Picks the number of target classes from [k_min, k_max].
///
/// Union mode clusters source and target together and scores the
/// Hungarian clustering accuracy on the labeled source part. Target-only mode
/// clusters the target, runs the matching step, and scores the fraction of
/// source samples whose nearest prototype is matched to their own class.
/// Ties go to the smallest k.
EstimateResult estimate_num_classes(const EmbeddingSet& source, const EmbeddingSet& target,
                                    const EstimateRange& range, const DiscoveryConfig& config);

}  // namespace owdisc
