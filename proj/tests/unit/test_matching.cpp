#include <doctest.h>

#include <cmath>

#include "owdisc/errors.hpp"
#include "owdisc/matching.hpp"
#include "support.hpp"

using namespace owdisc;

namespace {

CountMatrix counts(std::initializer_list<std::initializer_list<std::int64_t>> values) {
  CountMatrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : values) {
    Eigen::Index j = 0;
    for (auto v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

PrototypeBank bank(std::initializer_list<std::initializer_list<float>> columns) {
  return PrototypeBank(test::rows(columns).transpose(), PrototypeKind::Target);
}

}  // namespace

TEST_CASE("co-occurrence of samples sitting on prototypes") {
  const PrototypeBank protos = bank({{1, 0}, {0, 1}, {-1, 0}});
  const EmbeddingSet source(test::rows({{1, 0}, {1, 0}, {1, 0}, {0, 1}, {0, 1}}), Labels{0, 0, 0, 1, 1});
  CHECK(co_occurrence(source, protos) == counts({{3, 0}, {0, 2}, {0, 0}}));
}

TEST_CASE("dot-product ties go to the lowest prototype") {
  const float h = static_cast<float>(std::sqrt(0.5));
  const PrototypeBank protos = bank({{1, 0}, {0, 1}});
  const EmbeddingSet source(test::rows({{h, h}}), Labels{0});
  CHECK(co_occurrence(source, protos) == counts({{1}, {0}}));
}

TEST_CASE("co-occurrence columns recount each class") {
  const EmbeddingSet source = test::blobs(4, 30, 8, 0.2, 3);
  const PrototypeBank protos = PrototypeBank::from_directions(Eigen::MatrixXd::Identity(8, 6), PrototypeKind::Target);
  const CountMatrix gamma = co_occurrence(source, protos);
  CountMatrix oracle = CountMatrix::Zero(6, 4);
  for (std::size_t i = 0; i < source.count(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index p = 1; p < 6; ++p) {
      if (source.row(i).dot(protos.column(static_cast<std::size_t>(p))) >
          source.row(i).dot(protos.column(static_cast<std::size_t>(best)))) {
        best = p;
      }
    }
    ++oracle(best, source.label(i));
  }
  CHECK(gamma == oracle);
  for (Eigen::Index j = 0; j < 4; ++j) CHECK(gamma.col(j).sum() == 30);
}

TEST_CASE("co-occurrence needs labels and matching dimensions") {
  const PrototypeBank protos = bank({{1, 0}});
  CHECK_THROWS_AS(co_occurrence(EmbeddingSet(test::rows({{1, 0}})), protos), ValidationError);
  CHECK_THROWS_AS(co_occurrence(EmbeddingSet(test::rows({{1, 0, 0}}), Labels{0}), protos), ValidationError);
}

TEST_CASE("column softmax values") {
  const Eigen::MatrixXd d = column_softmax(counts({{3, 7, 1000}, {0, 7, 0}, {0, 7, 0}}));
  CHECK(d(0, 0) == doctest::Approx(0.9094).epsilon(1e-4));
  CHECK(d(1, 0) == doctest::Approx(0.0453).epsilon(1e-3));
  CHECK(d(2, 0) == doctest::Approx(0.0453).epsilon(1e-3));
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(d(i, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(std::abs(d(0, 2) - 1.0) <= 1e-12);
  CHECK(d(1, 2) <= 1e-12);
  CHECK(d.allFinite());
}

TEST_CASE("thresholding") {
  Eigen::MatrixXd d(3, 2);
  d << 0.909, 0.5, 0.045, 0.48, 0.045, 0.02;
  const MatchMatrix m = threshold_match(d, 0.3);
  CHECK(m(0, 0) == 1);
  CHECK(m(1, 0) == 0);
  CHECK(m(2, 0) == 0);
  CHECK(m(0, 1) == 1);
  CHECK(m(2, 1) == 0);
  d(0, 0) = 0.3;
  CHECK(threshold_match(d, 0.3)(0, 0) == 1);
}

TEST_CASE("split follows the over/under-clustering pattern") {
  MatchMatrix m = MatchMatrix::Zero(5, 3);
  m(0, 0) = 1;
  m(1, 0) = 1;
  m(3, 1) = 1;
  m(3, 2) = 1;
  const PrototypeBank protos = PrototypeBank::from_directions(Eigen::MatrixXd::Identity(5, 5), PrototypeKind::Target);
  const PrototypeSplit split = split_prototypes(protos, m);
  CHECK(split.unseen_indices == std::vector<std::size_t>{2, 4});
  CHECK(split.class_to_prototypes == std::vector<std::vector<std::size_t>>{{0, 1}, {3}, {3}});
  REQUIRE(split.unseen.count() == 2);
  CHECK(split.unseen.column(0) == protos.column(2));
  CHECK(split.unseen.column(1) == protos.column(4));
  CHECK(split.unseen.kind() == PrototypeKind::Unseen);

  CHECK(split_prototypes(protos, MatchMatrix::Zero(5, 3)).unseen.count() == 5);
  CHECK(split_prototypes(protos, MatchMatrix::Ones(5, 3)).unseen.empty());
}

TEST_CASE("classifier assembly") {
  const PrototypeBank seen = PrototypeBank::from_directions(Eigen::MatrixXd::Identity(6, 3), PrototypeKind::Seen);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(6, 2);
  u(3, 0) = 2.0;
  u(4, 1) = 1.0;
  u(5, 1) = 1.0;
  const PrototypeBank unseen = PrototypeBank::from_directions(u, PrototypeKind::Unseen);
  const PrototypeBank combined = assemble_classifier(seen, unseen);
  CHECK(combined.count() == 5);
  CHECK(combined.columns().leftCols(3) == seen.columns());
  for (std::size_t c = 0; c < 5; ++c) CHECK(combined.column(c).norm() == doctest::Approx(1.0f).epsilon(1e-6));

  const PrototypeBank alone =
      assemble_classifier(seen, PrototypeBank(Eigen::MatrixXf(6, 0), PrototypeKind::Unseen));
  CHECK(alone.columns() == seen.columns());
}

TEST_CASE("histogram counts every entry of D") {
  Eigen::MatrixXd d(2, 2);
  d << 0.01, 1.0, 0.99, 0.0;
  const DistributionHistogram h = distribution_histogram(d);
  CHECK(h.below_0_02 == 2);
  CHECK(h.above_0_98 == 2);
  CHECK(h.bins[0] == 2);
  CHECK(h.bins[9] == 2);
}
