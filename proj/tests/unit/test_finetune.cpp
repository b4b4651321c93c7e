#include <doctest.h>

#include <cmath>
#include <random>

#include "owdisc/errors.hpp"
#include "owdisc/finetune.hpp"
#include "owdisc/prototypes.hpp"
#include "support.hpp"

using namespace owdisc;

namespace {

DiscoveryModel random_model(std::uint64_t seed, Eigen::Index d, Eigen::Index k, std::size_t seen, AdapterKind kind) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd w(d, k);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = normal(rng);
  DiscoveryConfig config;
  config.adapter_kind = kind;
  DiscoveryModel model = make_model(PrototypeBank::from_directions(w, PrototypeKind::Combined), seen, config);
  for (Eigen::Index i = 0; i < model.adapter.weights.size(); ++i) {
    model.adapter.weights.data()[i] = static_cast<float>(0.1 * normal(rng));
  }
  return model;
}

EmbeddingSet random_set(std::uint64_t seed, Eigen::Index n, Eigen::Index d, std::size_t classes = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal;
  FloatMatrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  if (classes == 0) return EmbeddingSet(m);
  Labels labels(static_cast<std::size_t>(n));
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng() % classes);
  return EmbeddingSet(m, labels);
}

}  // namespace

TEST_CASE("prediction rows are distributions and self-similarity wins") {
  DiscoveryModel model = random_model(1, 5, 4, 2, AdapterKind::LinearResidual);
  const Eigen::MatrixXd p = predict(model, random_set(2, 9, 5));
  for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));

  model.adapter = Adapter::identity();
  model.temperature = 0.01;
  const FloatMatrix columns = model.classifier.columns().transpose();
  const PredictionSet labels = predict_labels(model, EmbeddingSet(columns));
  for (std::uint32_t c = 0; c < 4; ++c) CHECK(labels.assignments[c] == c);
}

TEST_CASE("identical columns share probability") {
  Eigen::MatrixXd w(3, 3);
  w << 1, 1, 0, 0, 0, 1, 0, 0, 0;
  DiscoveryModel model = make_model(PrototypeBank::from_directions(w, PrototypeKind::Combined), 1,
                                    DiscoveryConfig{.adapter_kind = AdapterKind::None});
  const Eigen::MatrixXd p = predict(model, EmbeddingSet(test::rows({{0.6f, 0.8f, 0}})));
  CHECK(std::abs(p(0, 0) - p(0, 1)) <= 1e-9);
}

TEST_CASE("supervised loss values") {
  DiscoveryConfig config;
  config.adapter_kind = AdapterKind::None;
  config.temperature = 1e-3;
  const EmbeddingSet onehot(test::rows({{1, 0}, {0, 1}}), Labels{0, 1});
  const DiscoveryModel sharp =
      make_model(PrototypeBank::from_directions(Eigen::MatrixXd::Identity(2, 2), PrototypeKind::Combined), 2, config);
  CHECK(loss_supervised(sharp, onehot) == doctest::Approx(0.0));

  // Orthogonal to every column: uniform over the three seen classes.
  config.temperature = 1.0;
  const DiscoveryModel flat =
      make_model(PrototypeBank::from_directions(Eigen::MatrixXd::Identity(4, 3), PrototypeKind::Combined), 3, config);
  const EmbeddingSet orth(test::rows({{0, 0, 0, 1}}), Labels{2});
  CHECK(loss_supervised(flat, orth) == doctest::Approx(std::log(3.0)));

  const EmbeddingSet a(test::rows({{1, 0, 0, 0}}), Labels{1});
  const EmbeddingSet b(test::rows({{0, 0.6f, 0.8f, 0}}), Labels{0});
  const EmbeddingSet ab(test::rows({{1, 0, 0, 0}, {0, 0.6f, 0.8f, 0}}), Labels{1, 0});
  CHECK(loss_supervised(flat, ab) == doctest::Approx((loss_supervised(flat, a) + loss_supervised(flat, b)) / 2));
}

TEST_CASE("regularizer values") {
  DiscoveryConfig config;
  config.adapter_kind = AdapterKind::None;
  config.temperature = 1.0;
  const DiscoveryModel flat =
      make_model(PrototypeBank::from_directions(Eigen::MatrixXd::Identity(4, 3), PrototypeKind::Combined), 3, config);
  CHECK(loss_reg(flat, EmbeddingSet(test::rows({{0, 0, 0, 1}}))) == doctest::Approx(-std::log(3.0)));

  config.temperature = 1e-4;
  const DiscoveryModel sharp =
      make_model(PrototypeBank::from_directions(Eigen::MatrixXd::Identity(2, 2), PrototypeKind::Combined), 2, config);
  CHECK(loss_reg(sharp, EmbeddingSet(test::rows({{1, 0}}))) == doctest::Approx(0.0));
  CHECK(loss_reg(sharp, EmbeddingSet(test::rows({{1, 0}, {0, 1}}))) == doctest::Approx(-std::log(2.0)));
}

TEST_CASE("analytic gradients agree with finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DiscoveryModel model = random_model(seed, 5, 4, 2, seed % 2 ? AdapterKind::None : AdapterKind::LinearResidual);
    model.lambda = 0.5;
    const auto report = gradient_check(model, random_set(seed + 100, 7, 5, 2), random_set(seed + 200, 6, 5));
    CHECK(report.max_relative_error < 1e-4);
    CHECK(report.parameters_checked == model.classifier.columns().size() + model.adapter.parameter_count());
  }
}

TEST_CASE("the regularizer block is the lambda-scaled part of the gradient") {
  DiscoveryModel model = random_model(3, 4, 3, 1, AdapterKind::None);
  model.lambda = 1.0;
  const EmbeddingSet labeled = random_set(4, 5, 4, 1);
  const EmbeddingSet unlabeled = random_set(5, 6, 4);
  const ObjectiveGradient g = objective_gradient(model, labeled, unlabeled);
  // The regularizer block equals the total minus the supervised-only block.
  DiscoveryModel no_reg = model;
  no_reg.lambda = 0.0;
  const ObjectiveGradient g0 = objective_gradient(no_reg, labeled, unlabeled);
  CHECK((g.classifier - g0.classifier - g.classifier_reg).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(g0.classifier_reg.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g0.adapter.size() == 0);
}

TEST_CASE("zero iterations leave the model untouched") {
  const EmbeddingSet source = test::blobs(3, 20, 6, 0.05, 1);
  DiscoveryConfig config;
  config.iterations = 0;
  const DiscoveryModel model = make_model(class_mean_prototypes(source), 3, config);
  const FinetuneResult r = finetune(model, source, source.without_labels(), config);
  CHECK(r.model == model);
  CHECK(r.log.empty());
}

TEST_CASE("a perfect classifier stays at zero supervised loss") {
  const EmbeddingSet source(test::rows({{1, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, 1, 0}}), Labels{0, 1, 0, 1});
  DiscoveryConfig config;
  config.lambda = 0.0;
  config.adapter_kind = AdapterKind::None;
  config.temperature = 0.01;
  config.iterations = 50;
  config.batch_size = 2;
  const DiscoveryModel model = make_model(class_mean_prototypes(source), 2, config);
  const FinetuneResult r = finetune(model, source, source.without_labels(), config);
  REQUIRE(r.log.size() == 50);
  for (const auto& entry : r.log) CHECK(entry.loss_supervised < 1e-3);
}

TEST_CASE("with lambda zero unseen columns never move") {
  const EmbeddingSet source = test::blobs(3, 20, 6, 0.05, 2);
  DiscoveryConfig config;
  config.lambda = 0.0;
  config.iterations = 40;
  Eigen::MatrixXd w = class_mean_prototypes(source).columns().cast<double>();
  w.conservativeResize(6, 5);
  w.col(3) = Eigen::VectorXd::Unit(6, 4);
  w.col(4) = Eigen::VectorXd::Unit(6, 5);
  const DiscoveryModel model = make_model(PrototypeBank::from_directions(w, PrototypeKind::Combined), 3, config);
  const FinetuneResult r = finetune(model, source, source.without_labels(), config);
  CHECK(r.model.classifier.columns().rightCols(2) == model.classifier.columns().rightCols(2));
  CHECK(r.model.steps_taken == 40);
}

TEST_CASE("fine-tuning is deterministic for a seed") {
  const EmbeddingSet source = test::blobs(3, 30, 6, 0.1, 4);
  DiscoveryConfig config;
  config.iterations = 30;
  const DiscoveryModel model = make_model(class_mean_prototypes(source), 3, config);
  CHECK(finetune(model, source, source.without_labels(), config).model ==
        finetune(model, source, source.without_labels(), config).model);
}
