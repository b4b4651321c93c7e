#include "owdisc/prototypes.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "owdisc/errors.hpp"
#include "owdisc/kmeans.hpp"
#include "sampler.hpp"
#include "softmax.hpp"

namespace owdisc {
namespace {

void require_classes(const EmbeddingSet& source) {
  if (!source.has_labels()) throw ValidationError("seen prototypes need a labeled source set");
  const std::size_t classes = source.class_count();
  if (classes < 2) throw ValidationError("seen prototypes need at least 2 classes, got " + std::to_string(classes));
  std::vector<std::size_t> counts(classes, 0);
  for (auto label : source.labels()) ++counts[label];
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) throw ValidationError("seen class " + std::to_string(c) + " has no source samples");
  }
}

void normalize_columns(Eigen::MatrixXd& weights) {
  for (Eigen::Index c = 0; c < weights.cols(); ++c) {
    const double norm = weights.col(c).norm();
    if (norm > 0.0) weights.col(c) /= norm;
  }
}

}  // namespace

PrototypeBank class_mean_prototypes(const EmbeddingSet& source) {
  require_classes(source);
  const std::size_t classes = source.class_count();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(source.dim()), static_cast<Eigen::Index>(classes));
  for (std::size_t i = 0; i < source.count(); ++i) {
    sums.col(source.label(i)) += source.row(i).transpose().cast<double>();
  }
  return PrototypeBank::from_directions(sums, PrototypeKind::Seen);
}

PrototypeBank train_seen_prototypes(const EmbeddingSet& source, const DiscoveryConfig& config) {
  config.validate();
  const PrototypeBank init = class_mean_prototypes(source);
  if (config.iterations == 0) return init;

  const auto dim = static_cast<Eigen::Index>(source.dim());
  Eigen::MatrixXd weights = init.columns().cast<double>();
  detail::EpochSampler sampler(source.count(), config.seed, detail::kStreamSeenTraining);

  for (std::size_t step = 0; step < config.iterations; ++step) {
    const auto batch = sampler.next(config.batch_size);
    const auto b = static_cast<Eigen::Index>(batch.size());
    Eigen::MatrixXd z(b, dim);
    for (Eigen::Index r = 0; r < b; ++r) z.row(r) = source.row(batch[static_cast<std::size_t>(r)]).cast<double>();
    const Eigen::MatrixXd probs = detail::row_softmax(z * weights / config.temperature);
    Eigen::MatrixXd dlogits = probs;
    for (Eigen::Index r = 0; r < b; ++r) dlogits(r, source.label(batch[static_cast<std::size_t>(r)])) -= 1.0;
    dlogits /= static_cast<double>(b);
    weights -= config.lr_head * (z.transpose() * dlogits) / config.temperature;
    normalize_columns(weights);
  }

  PrototypeBank trained = PrototypeBank::from_directions(weights, PrototypeKind::Seen);
  if (nearest_prototype_accuracy(trained, source) < nearest_prototype_accuracy(init, source)) return init;
  return trained;
}

PrototypeBank target_prototypes(const EmbeddingSet& target, std::size_t k, const DiscoveryConfig& config) {
  KMeansParams params;
  params.seed = config.seed;
  params.max_iter = config.kmeans_max_iter;
  params.tol = config.kmeans_tol;
  params.restarts = config.kmeans_restarts;
  return normalize_centroids(kmeans_fit(target, k, params));
}

double nearest_prototype_accuracy(const PrototypeBank& bank, const EmbeddingSet& labeled) {
  if (labeled.empty()) return 0.0;
  if (bank.dim() != labeled.dim()) throw ValidationError("prototype dimension does not match the embeddings");
  const Eigen::MatrixXf scores = labeled.vectors() * bank.columns();
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    if (static_cast<std::uint32_t>(best) == labeled.label(static_cast<std::size_t>(i))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labeled.count());
}

}  // namespace owdisc
