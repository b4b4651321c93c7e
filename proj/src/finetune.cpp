#include "owdisc/finetune.hpp"

#include <cmath>
#include <string>

#include "owdisc/errors.hpp"
#include "sampler.hpp"
#include "softmax.hpp"

namespace owdisc {
namespace {

using Matrix = Eigen::MatrixXd;

struct Parameters {
  Matrix classifier;  // d x K
  Matrix adapter;     // d x d, empty without an adapter
  std::size_t seen_count = 0;
  double temperature = 1.0;
  double lambda = 0.0;

  bool has_adapter() const noexcept { return adapter.size() > 0; }
};

Parameters parameters_of(const DiscoveryModel& model) {
  Parameters p;
  p.classifier = model.classifier.columns().cast<double>();
  if (model.adapter.kind == AdapterKind::LinearResidual) p.adapter = model.adapter.weights.cast<double>();
  p.seen_count = model.seen_count;
  p.temperature = model.temperature;
  p.lambda = model.lambda;
  return p;
}

Matrix gather(const EmbeddingSet& set) { return set.vectors().cast<double>(); }

Matrix gather(const EmbeddingSet& set, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(set.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = set.row(rows[r]).cast<double>();
  return out;
}

// Adapter forward pass: h = u / |u| with u = z + A z.
struct Adapted {
  Matrix h;
  Eigen::VectorXd norms;
};

Adapted adapt(const Parameters& p, const Matrix& z) {
  Adapted out;
  if (!p.has_adapter()) {
    out.h = z;
    out.norms = Eigen::VectorXd::Ones(z.rows());
    return out;
  }
  Matrix u = z + z * p.adapter.transpose();
  out.norms = u.rowwise().norm();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    if (!(out.norms(i) > 0.0)) throw ValidationError("adapter maps sample " + std::to_string(i) + " to zero");
    u.row(i) /= out.norms(i);
  }
  out.h = std::move(u);
  return out;
}

// Backpropagates dL/dh through the adapter, returning dL/dA.
Matrix adapter_backward(const Adapted& forward, const Matrix& z, const Matrix& grad_h) {
  Matrix grad_u(grad_h.rows(), grad_h.cols());
  for (Eigen::Index i = 0; i < grad_h.rows(); ++i) {
    const double radial = forward.h.row(i).dot(grad_h.row(i));
    grad_u.row(i) = (grad_h.row(i) - radial * forward.h.row(i)) / forward.norms(i);
  }
  return grad_u.transpose() * z;
}

double supervised_loss_value(const Matrix& probs, const std::vector<std::uint32_t>& labels) {
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) loss -= std::log(probs(static_cast<Eigen::Index>(i), labels[i]));
  return loss / static_cast<double>(labels.size());
}

Eigen::RowVectorXd mean_log(const Eigen::RowVectorXd& mean) {
  Eigen::RowVectorXd out(mean.size());
  for (Eigen::Index c = 0; c < mean.size(); ++c) out(c) = mean(c) > 0.0 ? std::log(mean(c)) : 0.0;
  return out;
}

double reg_loss_value(const Matrix& probs) {
  const Eigen::RowVectorXd mean = probs.colwise().mean();
  return mean.cwiseProduct(mean_log(mean)).sum();
}

struct Evaluation {
  double loss_supervised = 0.0;
  double loss_reg = 0.0;
  Matrix grad_classifier;
  Matrix grad_adapter;
  Matrix grad_classifier_reg;
  Matrix grad_adapter_reg;
};

Evaluation evaluate_objective(const Parameters& p, const Matrix& zs, const std::vector<std::uint32_t>& labels,
                              const Matrix& zt, bool full_softmax, bool with_gradient) {
  Evaluation e;
  const auto classes = p.classifier.cols();
  const Eigen::Index softmax_cols = full_softmax ? classes : static_cast<Eigen::Index>(p.seen_count);

  const Adapted src = adapt(p, zs);
  const Matrix q = detail::row_softmax(src.h * p.classifier / p.temperature, softmax_cols);
  e.loss_supervised = supervised_loss_value(q, labels);

  const Adapted tgt = adapt(p, zt);
  const Matrix probs = detail::row_softmax(tgt.h * p.classifier / p.temperature);
  const Eigen::RowVectorXd mean = probs.colwise().mean();
  const Eigen::RowVectorXd log_mean = mean_log(mean);
  e.loss_reg = mean.cwiseProduct(log_mean).sum();
  if (!with_gradient) return e;

  // dL_s/dlogits = (q - onehot) / B on the softmax columns.
  Matrix d_src = q;
  for (std::size_t i = 0; i < labels.size(); ++i) d_src(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
  d_src /= static_cast<double>(labels.size());

  // dL_reg/dlogit_ic = p_ic (ln pbar_c - sum_k p_ik ln pbar_k) / B.
  Matrix d_tgt(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double expected = probs.row(i).dot(log_mean);
    d_tgt.row(i) = probs.row(i).cwiseProduct((log_mean.array() - expected).matrix());
  }
  d_tgt *= p.lambda / static_cast<double>(probs.rows());

  const Matrix grad_w_src = src.h.transpose() * d_src / p.temperature;
  e.grad_classifier_reg = tgt.h.transpose() * d_tgt / p.temperature;
  e.grad_classifier = grad_w_src + e.grad_classifier_reg;

  if (p.has_adapter()) {
    const Matrix grad_a_src = adapter_backward(src, zs, d_src * p.classifier.transpose() / p.temperature);
    e.grad_adapter_reg = adapter_backward(tgt, zt, d_tgt * p.classifier.transpose() / p.temperature);
    e.grad_adapter = grad_a_src + e.grad_adapter_reg;
  }
  return e;
}

void check_labels(const EmbeddingSet& labeled, std::size_t seen_count) {
  if (!labeled.has_labels()) throw ValidationError("supervised loss needs labeled samples");
  for (std::size_t i = 0; i < labeled.count(); ++i) {
    if (labeled.label(i) >= seen_count) {
      throw ValidationError("label " + std::to_string(labeled.label(i)) + " of sample " + std::to_string(i) +
                            " is outside the " + std::to_string(seen_count) + " seen classes");
    }
  }
}

void check_model(const DiscoveryModel& model, std::size_t dim) {
  if (model.classifier.dim() != dim) {
    throw ValidationError("model dimension " + std::to_string(model.classifier.dim()) +
                          " does not match embedding dimension " + std::to_string(dim));
  }
}

double objective_value(const Parameters& p, const Matrix& zs, const std::vector<std::uint32_t>& labels,
                       const Matrix& zt, bool full_softmax) {
  const Evaluation e = evaluate_objective(p, zs, labels, zt, full_softmax, false);
  return e.loss_supervised + p.lambda * e.loss_reg;
}

}  // namespace

Adapter Adapter::zero_residual(std::size_t dim) {
  Adapter adapter;
  adapter.kind = AdapterKind::LinearResidual;
  adapter.weights = Eigen::MatrixXf::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  return adapter;
}

Eigen::MatrixXd Adapter::apply(const FloatMatrix& batch) const {
  Parameters p;
  if (kind == AdapterKind::LinearResidual) p.adapter = weights.cast<double>();
  return adapt(p, batch.cast<double>()).h;
}

DiscoveryModel make_model(const PrototypeBank& classifier, std::size_t seen_count, const DiscoveryConfig& config) {
  if (seen_count > classifier.count()) throw ValidationError("seen count exceeds classifier columns");
  DiscoveryModel model;
  model.classifier = classifier.with_kind(PrototypeKind::Combined);
  model.adapter = config.adapter_kind == AdapterKind::LinearResidual ? Adapter::zero_residual(classifier.dim())
                                                                      : Adapter::identity();
  model.seen_count = seen_count;
  model.temperature = config.temperature;
  model.lambda = config.lambda;
  model.lr_head = config.lr_head;
  model.lr_adapter = config.lr_adapter;
  model.seed = config.seed;
  return model;
}

Eigen::MatrixXd predict(const DiscoveryModel& model, const EmbeddingSet& batch) {
  check_model(model, batch.dim());
  const Parameters p = parameters_of(model);
  return detail::row_softmax(adapt(p, gather(batch)).h * p.classifier / p.temperature);
}

PredictionSet predict_labels(const DiscoveryModel& model, const EmbeddingSet& batch) {
  PredictionSet out;
  if (batch.empty()) return out;
  const Eigen::MatrixXd probs = predict(model, batch);
  out.assignments.resize(batch.count());
  out.confidences.resize(batch.count());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(i, c) > probs(i, best)) best = c;
    }
    out.assignments[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(best);
    out.confidences[static_cast<std::size_t>(i)] = static_cast<float>(probs(i, best));
  }
  return out;
}

double loss_supervised(const DiscoveryModel& model, const EmbeddingSet& labeled, bool full_softmax) {
  check_model(model, labeled.dim());
  check_labels(labeled, model.seen_count);
  if (labeled.empty()) throw ValidationError("supervised loss needs a non-empty batch");
  const Parameters p = parameters_of(model);
  const auto cols = full_softmax ? p.classifier.cols() : static_cast<Eigen::Index>(p.seen_count);
  return supervised_loss_value(detail::row_softmax(adapt(p, gather(labeled)).h * p.classifier / p.temperature, cols),
                               labeled.labels());
}

double loss_reg(const DiscoveryModel& model, const EmbeddingSet& unlabeled) {
  check_model(model, unlabeled.dim());
  if (unlabeled.empty()) throw ValidationError("regularization loss needs a non-empty batch");
  return reg_loss_value(predict(model, unlabeled));
}

ObjectiveGradient objective_gradient(const DiscoveryModel& model, const EmbeddingSet& labeled,
                                     const EmbeddingSet& reg_batch, bool full_softmax) {
  check_model(model, labeled.dim());
  check_model(model, reg_batch.dim());
  check_labels(labeled, model.seen_count);
  if (labeled.empty() || reg_batch.empty()) throw ValidationError("objective needs non-empty batches");
  const Parameters p = parameters_of(model);
  Evaluation e = evaluate_objective(p, gather(labeled), labeled.labels(), gather(reg_batch), full_softmax, true);
  ObjectiveGradient g;
  g.loss_supervised = e.loss_supervised;
  g.loss_reg = e.loss_reg;
  g.total = e.loss_supervised + p.lambda * e.loss_reg;
  g.classifier = std::move(e.grad_classifier);
  g.adapter = std::move(e.grad_adapter);
  g.classifier_reg = std::move(e.grad_classifier_reg);
  g.adapter_reg = std::move(e.grad_adapter_reg);
  return g;
}

FinetuneResult finetune(const DiscoveryModel& model, const EmbeddingSet& source, const EmbeddingSet& target,
                        const DiscoveryConfig& config) {
  config.validate();
  if (source.empty()) throw ValidationError("fine-tuning needs a non-empty source set");
  if (target.empty()) throw ValidationError("fine-tuning needs a non-empty target set");
  check_model(model, source.dim());
  check_model(model, target.dim());
  check_labels(source, model.seen_count);

  FinetuneResult result{model, {}};
  if (config.iterations == 0) return result;

  Parameters p = parameters_of(model);
  detail::EpochSampler source_sampler(source.count(), config.seed, detail::kStreamFinetuneSource);
  detail::EpochSampler target_sampler(target.count(), config.seed, detail::kStreamFinetuneTarget);
  const Matrix full_target = config.full_set_regularizer ? gather(target) : Matrix();
  result.log.reserve(config.iterations);

  for (std::size_t step = 0; step < config.iterations; ++step) {
    const auto source_rows = source_sampler.next(config.batch_size);
    std::vector<std::uint32_t> labels(source_rows.size());
    for (std::size_t i = 0; i < source_rows.size(); ++i) labels[i] = source.label(source_rows[i]);
    const Matrix zs = gather(source, source_rows);
    const Matrix zt = config.full_set_regularizer ? full_target : gather(target, target_sampler.next(config.batch_size));

    const Evaluation e = evaluate_objective(p, zs, labels, zt, config.supervised_full_softmax, true);
    result.log.push_back({step + 1, e.loss_supervised, e.loss_reg, e.loss_supervised + p.lambda * e.loss_reg});

    p.classifier -= config.lr_head * e.grad_classifier;
    for (Eigen::Index c = 0; c < p.classifier.cols(); ++c) {
      // Columns without gradient stay bit-identical.
      if (e.grad_classifier.col(c).isZero(0.0)) continue;
      p.classifier.col(c) /= p.classifier.col(c).norm();
    }
    if (p.has_adapter()) p.adapter -= config.lr_adapter * e.grad_adapter;
  }

  result.model.classifier = PrototypeBank(p.classifier.cast<float>(), PrototypeKind::Combined);
  if (p.has_adapter()) result.model.adapter.weights = p.adapter.cast<float>();
  result.model.steps_taken += config.iterations;
  return result;
}

GradientCheckReport gradient_check(const DiscoveryModel& model, const EmbeddingSet& batch_s,
                                   const EmbeddingSet& batch_t, bool full_softmax) {
  constexpr double kStep = 1e-5;
  constexpr double kFloor = 1e-6;
  const ObjectiveGradient analytic = objective_gradient(model, batch_s, batch_t, full_softmax);
  const Parameters base = parameters_of(model);
  const Matrix zs = gather(batch_s);
  const Matrix zt = gather(batch_t);

  GradientCheckReport report;
  auto check_block = [&](Matrix Parameters::*block, const Matrix& grad) {
    for (Eigen::Index idx = 0; idx < grad.size(); ++idx) {
      Parameters plus = base;
      Parameters minus = base;
      (plus.*block).data()[idx] += kStep;
      (minus.*block).data()[idx] -= kStep;
      const double numeric = (objective_value(plus, zs, batch_s.labels(), zt, full_softmax) -
                              objective_value(minus, zs, batch_s.labels(), zt, full_softmax)) /
                             (2.0 * kStep);
      const double a = grad.data()[idx];
      const double denom = std::max({std::abs(a), std::abs(numeric), kFloor});
      report.max_relative_error = std::max(report.max_relative_error, std::abs(a - numeric) / denom);
      ++report.parameters_checked;
    }
  };
  check_block(&Parameters::classifier, analytic.classifier);
  if (base.has_adapter()) check_block(&Parameters::adapter, analytic.adapter);
  return report;
}

}  // namespace owdisc
