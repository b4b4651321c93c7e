#include "owdisc/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <string>
#include <type_traits>

#include "owdisc/errors.hpp"
#include "owdisc/kmeans.hpp"
#include "owdisc/prototypes.hpp"

namespace owdisc {
namespace {

// Runs `body`, records its wall time, and tags any failure with the stage.
template <typename F>
auto run_stage(const std::string& stage, RunReport& report, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    report.timings.push_back({stage, elapsed.count()});
  };
  try {
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
      body();
      record();
    } else {
      auto result = body();
      record();
      return result;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void check_inputs(const EmbeddingSet& source, const EmbeddingSet& target, std::span<const std::uint32_t> truth) {
  if (!source.has_labels()) throw StageError("input", "source embeddings must be labeled");
  if (source.empty()) throw StageError("input", "source set is empty");
  if (target.empty()) throw StageError("input", "target set is empty");
  if (source.dim() != target.dim()) {
    throw StageError("input", "source dimension " + std::to_string(source.dim()) + " differs from target dimension " +
                                  std::to_string(target.dim()));
  }
  if (!truth.empty() && truth.size() != target.count()) {
    throw StageError("input", std::to_string(truth.size()) + " truth labels for " + std::to_string(target.count()) +
                                  " target samples");
  }
}

void validate_config(const DiscoveryConfig& config) {
  try {
    config.validate();
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
}

std::optional<EvalReport> maybe_evaluate(const PredictionSet& predictions, std::span<const std::uint32_t> truth,
                                         std::size_t seen_count) {
  if (truth.empty()) return std::nullopt;
  return evaluate(predictions, Labels(truth.begin(), truth.end()), ClassCatalog{seen_count, std::nullopt});
}

KMeansParams kmeans_params(const DiscoveryConfig& config) {
  KMeansParams params;
  params.seed = config.seed;
  params.max_iter = config.kmeans_max_iter;
  params.tol = config.kmeans_tol;
  params.restarts = config.kmeans_restarts;
  return params;
}

DiscoveryRun discover_impl(const EmbeddingSet& source, const EmbeddingSet& target, const PrototypeBank& seen,
                           const PrototypeBank& target_protos, const DiscoveryConfig& config,
                           std::span<const std::uint32_t> truth, RunReport report) {
  DiscoveryRun run;
  run.seen_prototypes = seen;
  run.target_prototypes = target_protos;
  const std::size_t seen_count = seen.count();

  PrototypeBank unseen;
  run.match = run_stage("match", report, [&] {
    MatchResult match;
    match.cooccurrence = co_occurrence(source, target_protos);
    match.distribution = column_softmax(match.cooccurrence);
    match.matches = threshold_match(match.distribution, config.tau);
    PrototypeSplit split = split_prototypes(target_protos, match.matches);
    match.unseen_prototype_indices = split.unseen_indices;
    match.class_to_prototypes = std::move(split.class_to_prototypes);
    unseen = std::move(split.unseen);
    return match;
  });
  report.match = MatchSummary{run.match.prototype_count(), run.match.matched_count(),
                              run.match.unseen_prototype_indices.size(), run.match.unseen_prototype_indices,
                              run.match.class_to_prototypes, distribution_histogram(run.match.distribution)};

  run.initial_model = run_stage("assemble", report, [&] {
    return make_model(assemble_classifier(seen, unseen), seen_count, config);
  });
  report.eval_before_finetune = maybe_evaluate(predict_labels(run.initial_model, target), truth, seen_count);

  FinetuneResult tuned =
      run_stage("finetune", report, [&] { return finetune(run.initial_model, source, target, config); });
  run.final_model = std::move(tuned.model);
  report.training_log = std::move(tuned.log);

  run.predictions = run_stage("predict", report, [&] { return predict_labels(run.final_model, target); });
  report.eval = run_stage("eval", report, [&] { return maybe_evaluate(run.predictions, truth, seen_count); });
  run.report = std::move(report);
  return run;
}

RunReport new_report(std::string method, const DiscoveryConfig& config, const EmbeddingSet& source) {
  RunReport report;
  report.method = std::move(method);
  report.config = config;
  report.seen_count = source.class_count();
  return report;
}

}  // namespace

std::string_view to_string(EstimateMode mode) { return mode == EstimateMode::Union ? "union" : "target-only"; }

EstimateMode parse_estimate_mode(std::string_view text) {
  if (text == "union") return EstimateMode::Union;
  if (text == "target-only") return EstimateMode::TargetOnly;
  throw ValidationError("unknown estimate mode '" + std::string(text) + "' (expected union or target-only)");
}

DiscoveryRun crow_discover(const EmbeddingSet& source, const EmbeddingSet& target, const ClassCountSpec& classes,
                           const DiscoveryConfig& config, std::span<const std::uint32_t> truth) {
  validate_config(config);
  check_inputs(source, target, truth);
  RunReport report = new_report("crow", config, source);

  if (const auto* known = std::get_if<std::size_t>(&classes)) {
    report.target_class_count = *known;
  } else {
    const auto& range = std::get<EstimateRange>(classes);
    report.estimate = run_stage("estimate", report, [&] { return estimate_num_classes(source, target, range, config); });
    report.target_class_count = report.estimate->k;
  }

  const PrototypeBank seen =
      run_stage("seen-prototypes", report, [&] { return train_seen_prototypes(source, config); });
  const PrototypeBank target_protos = run_stage(
      "target-prototypes", report, [&] { return target_prototypes(target, report.target_class_count, config); });
  return discover_impl(source, target, seen, target_protos, config, truth, std::move(report));
}

DiscoveryRun discover_from_prototypes(const EmbeddingSet& source, const EmbeddingSet& target,
                                      const PrototypeBank& seen_prototypes, const PrototypeBank& target_prototypes,
                                      const DiscoveryConfig& config, std::span<const std::uint32_t> truth) {
  validate_config(config);
  check_inputs(source, target, truth);
  RunReport report = new_report("crow", config, source);
  report.target_class_count = target_prototypes.count();
  return discover_impl(source, target, seen_prototypes, target_prototypes, config, truth, std::move(report));
}

std::vector<double> simple_threshold_grid(std::size_t seen_count) {
  const double max_entropy = std::log(static_cast<double>(seen_count));
  std::vector<double> grid;
  for (int i = 1; i <= 9; ++i) grid.push_back(max_entropy * i / 10.0);
  return grid;
}

BaselineRun simple_baseline(const EmbeddingSet& source, const EmbeddingSet& target, std::size_t target_class_count,
                            const DiscoveryConfig& config, double entropy_threshold,
                            std::span<const std::uint32_t> truth) {
  validate_config(config);
  check_inputs(source, target, truth);
  RunReport report = new_report("simple", config, source);
  report.target_class_count = target_class_count;
  const std::size_t seen_count = report.seen_count;
  const double max_entropy = std::log(static_cast<double>(seen_count));
  if (!(entropy_threshold > 0.0 && entropy_threshold <= max_entropy)) {
    throw StageError("input", "entropy threshold must lie in (0, ln " + std::to_string(seen_count) + "], got " +
                                  std::to_string(entropy_threshold));
  }
  if (target_class_count <= seen_count) {
    throw StageError("input", "SIMPLE needs more target classes than the " + std::to_string(seen_count) +
                                  " seen classes");
  }

  // The feature space stays frozen throughout this baseline.
  DiscoveryConfig frozen = config;
  frozen.adapter_kind = AdapterKind::None;
  report.config = frozen;

  const PrototypeBank seen = run_stage("seen-prototypes", report, [&] { return train_seen_prototypes(source, frozen); });

  std::vector<std::size_t> marked = run_stage("entropy", report, [&] {
    const Eigen::MatrixXd probs = predict(make_model(seen, seen_count, frozen), target);
    std::vector<std::size_t> rows;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
      double entropy = 0.0;
      for (Eigen::Index c = 0; c < probs.cols(); ++c) {
        if (probs(i, c) > 0.0) entropy -= probs(i, c) * std::log(probs(i, c));
      }
      if (entropy > entropy_threshold) rows.push_back(static_cast<std::size_t>(i));
    }
    return rows;
  });

  const std::size_t novel = std::min(target_class_count - seen_count, marked.size());
  PrototypeBank unseen = run_stage("cluster-unseen", report, [&] {
    if (novel == 0) return PrototypeBank(Eigen::MatrixXf(static_cast<Eigen::Index>(seen.dim()), 0), PrototypeKind::Unseen);
    return normalize_centroids(kmeans_fit(target.select(marked), novel, kmeans_params(frozen)))
        .with_kind(PrototypeKind::Unseen);
  });
  report.simple = SimpleSummary{entropy_threshold, marked.size(), novel};

  const DiscoveryModel initial = make_model(assemble_classifier(seen, unseen), seen_count, frozen);
  report.eval_before_finetune = maybe_evaluate(predict_labels(initial, target), truth, seen_count);
  FinetuneResult tuned = run_stage("finetune", report, [&] { return finetune(initial, source, target, frozen); });
  report.training_log = std::move(tuned.log);

  BaselineRun run;
  run.predictions = run_stage("predict", report, [&] { return predict_labels(tuned.model, target); });
  report.eval = run_stage("eval", report, [&] { return maybe_evaluate(run.predictions, truth, seen_count); });
  run.report = std::move(report);
  return run;
}

KMeansBaselineResult kmeans_baseline(const EmbeddingSet& target, std::size_t k, std::span<const std::uint32_t> truth,
                                     const DiscoveryConfig& config) {
  RunReport scratch;
  if (truth.size() != target.count()) {
    throw StageError("input", std::to_string(truth.size()) + " truth labels for " + std::to_string(target.count()) +
                                  " target samples");
  }
  KMeansBaselineResult result;
  const KMeansResult km = run_stage("kmeans", scratch, [&] { return kmeans_fit(target, k, kmeans_params(config)); });
  result.clusters.assign(km.assignments.begin(), km.assignments.end());
  result.accuracy = run_stage("eval", scratch, [&] { return clustering_accuracy(result.clusters, truth); });
  return result;
}

EstimateResult estimate_num_classes(const EmbeddingSet& source, const EmbeddingSet& target,
                                    const EstimateRange& range, const DiscoveryConfig& config) {
  config.validate();
  if (!source.has_labels()) throw ValidationError("class-count estimation needs a labeled source set");
  if (range.k_min == 0 || range.k_min > range.k_max) {
    throw ValidationError("empty k grid [" + std::to_string(range.k_min) + ", " + std::to_string(range.k_max) + "]");
  }
  if (range.k_min < source.class_count()) {
    throw ValidationError("k grid starts below the " + std::to_string(source.class_count()) + " seen classes");
  }
  if (range.k_max > target.count()) {
    throw ValidationError("k grid exceeds the " + std::to_string(target.count()) + " target samples");
  }

  EstimateResult result;
  result.mode = range.mode;
  const EmbeddingSet joined = range.mode == EstimateMode::Union ? concatenate(source.without_labels(), target) : EmbeddingSet();
  double best_score = -1.0;
  for (std::size_t k = range.k_min; k <= range.k_max; ++k) {
    double score = 0.0;
    if (range.mode == EstimateMode::Union) {
      const KMeansResult km = kmeans_fit(joined, k, kmeans_params(config));
      const std::vector<std::uint32_t> source_clusters(km.assignments.begin(),
                                                       km.assignments.begin() + static_cast<std::ptrdiff_t>(source.count()));
      score = clustering_accuracy(source_clusters, source.labels()).accuracy;
    } else {
      const PrototypeBank protos = target_prototypes(target, k, config);
      const MatchResult match = match_prototypes(source, protos, config.tau);
      const Eigen::MatrixXf similarity = source.vectors() * protos.columns();
      std::size_t hits = 0;
      for (Eigen::Index i = 0; i < similarity.rows(); ++i) {
        Eigen::Index nearest = 0;
        for (Eigen::Index p = 1; p < similarity.cols(); ++p) {
          if (similarity(i, p) > similarity(i, nearest)) nearest = p;
        }
        if (match.matches(nearest, source.label(static_cast<std::size_t>(i))) != 0) ++hits;
      }
      score = static_cast<double>(hits) / static_cast<double>(source.count());
    }
    result.scores.emplace_back(k, score);
    if (score > best_score) {
      best_score = score;
      result.k = k;
    }
  }
  return result;
}

}  // namespace owdisc
