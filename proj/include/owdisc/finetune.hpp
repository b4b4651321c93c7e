#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "owdisc/config.hpp"
#include "owdisc/embedding.hpp"
#include "owdisc/prototype_bank.hpp"

namespace owdisc {

// Learnable transform applied to frozen embeddings before the classifier:
// a(z) = normalize(z + W z) for linear-residual, a(z) = z for none.
struct Adapter {
  AdapterKind kind = AdapterKind::None;
  Eigen::MatrixXf weights;  // d x d, empty for kind None

  static Adapter identity() { return {}; }
  static Adapter zero_residual(std::size_t dim);

  std::size_t parameter_count() const noexcept { return static_cast<std::size_t>(weights.size()); }
  // Applies the adapter to every row of `batch`, returning unit-norm rows.
  Eigen::MatrixXd apply(const FloatMatrix& batch) const;

  friend bool operator==(const Adapter& a, const Adapter& b) {
    return a.kind == b.kind && a.weights.rows() == b.weights.rows() &&
           a.weights.cols() == b.weights.cols() && a.weights == b.weights;
  }
};

struct DiscoveryModel {
  Adapter adapter;
  PrototypeBank classifier;  // combined [seen | unseen]
  std::size_t seen_count = 0;
  double temperature = 0.1;
  double lambda = 0.1;
  double lr_head = 0.001;
  double lr_adapter = 0.0001;
  std::size_t steps_taken = 0;
  std::uint64_t seed = 0;

  std::size_t class_count() const noexcept { return classifier.count(); }

  friend bool operator==(const DiscoveryModel&, const DiscoveryModel&) = default;
};

// Fresh model over `classifier` with a zero-initialized adapter of the
// configured kind.
DiscoveryModel make_model(const PrototypeBank& classifier, std::size_t seen_count,
                          const DiscoveryConfig& config);

// n x K matrix of softmax(W^T a(z) / temperature) rows.
Eigen::MatrixXd predict(const DiscoveryModel& model, const EmbeddingSet& batch);

// Row argmax (ties to the lowest id) and its probability.
PredictionSet predict_labels(const DiscoveryModel& model, const EmbeddingSet& batch);

// Mean negative log-likelihood of the labels. The softmax runs over the seen
// columns only unless `full_softmax` is set.
double loss_supervised(const DiscoveryModel& model, const EmbeddingSet& labeled, bool full_softmax = false);

// sum_c pbar_c ln pbar_c of the mean prediction, with 0 ln 0 = 0.
double loss_reg(const DiscoveryModel& model, const EmbeddingSet& unlabeled);

struct ObjectiveGradient {
  double loss_supervised = 0.0;
  double loss_reg = 0.0;
  double total = 0.0;
  Eigen::MatrixXd classifier;      // d x K, gradient of the total
  Eigen::MatrixXd adapter;         // d x d, empty without an adapter
  Eigen::MatrixXd classifier_reg;  // lambda * dL_reg/dW
  Eigen::MatrixXd adapter_reg;     // lambda * dL_reg/dA
};

// Analytic gradient of L_s + lambda * L_reg at the model's raw parameters
// (before any projection). `reg_batch` feeds the regularizer.
ObjectiveGradient objective_gradient(const DiscoveryModel& model, const EmbeddingSet& labeled,
                                     const EmbeddingSet& reg_batch, bool full_softmax = false);

struct TrainLogEntry {
  std::size_t step = 0;
  double loss_supervised = 0.0;
  double loss_reg = 0.0;
  double total = 0.0;
};

struct FinetuneResult {
  DiscoveryModel model;
  std::vector<TrainLogEntry> log;
};

/// Minimizes L_s + lambda * L_reg with plain SGD.
///
/// Each step draws a source and a target mini-batch from per-epoch shuffles,
/// takes one step at lr_head on the classifier and lr_adapter on the adapter,
/// and renormalizes every updated classifier column.
FinetuneResult finetune(const DiscoveryModel& model, const EmbeddingSet& source, const EmbeddingSet& target,
                        const DiscoveryConfig& config);

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
};

// Central differences (h = 1e-5) of the full objective against
// objective_gradient for every classifier and adapter parameter. The relative
// error of one entry is |a - n| / max(|a|, |n|, 1e-6).
GradientCheckReport gradient_check(const DiscoveryModel& model, const EmbeddingSet& batch_s,
                                   const EmbeddingSet& batch_t, bool full_softmax = false);

}  // namespace owdisc
