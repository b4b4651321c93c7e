#include "owdisc/matching.hpp"

#include <cmath>
#include <string>

#include "owdisc/errors.hpp"

namespace owdisc {

namespace {

void collect_matches(const MatchMatrix& matches, std::vector<std::vector<std::size_t>>& class_to_prototypes,
                     std::vector<std::size_t>& unseen_indices) {
  class_to_prototypes.assign(static_cast<std::size_t>(matches.cols()), {});
  unseen_indices.clear();
  for (Eigen::Index i = 0; i < matches.rows(); ++i) {
    bool matched = false;
    for (Eigen::Index j = 0; j < matches.cols(); ++j) {
      if (matches(i, j) != 0) {
        class_to_prototypes[static_cast<std::size_t>(j)].push_back(static_cast<std::size_t>(i));
        matched = true;
      }
    }
    if (!matched) unseen_indices.push_back(static_cast<std::size_t>(i));
  }
}

}  // namespace

CountMatrix co_occurrence(const EmbeddingSet& source, const PrototypeBank& target_prototypes) {
  if (!source.has_labels()) throw ValidationError("co-occurrence needs a labeled source set");
  if (source.dim() != target_prototypes.dim()) {
    throw ValidationError("source dimension " + std::to_string(source.dim()) + " does not match prototype dimension " +
                          std::to_string(target_prototypes.dim()));
  }
  if (target_prototypes.empty()) throw ValidationError("co-occurrence needs at least one target prototype");
  const auto prototypes = static_cast<Eigen::Index>(target_prototypes.count());
  CountMatrix gamma = CountMatrix::Zero(prototypes, static_cast<Eigen::Index>(source.class_count()));
  const Eigen::MatrixXd protos = target_prototypes.columns().cast<double>();
  for (std::size_t i = 0; i < source.count(); ++i) {
    const Eigen::RowVectorXd similarity = source.row(i).cast<double>() * protos;
    Eigen::Index nearest = 0;
    for (Eigen::Index p = 1; p < prototypes; ++p) {
      if (similarity(p) > similarity(nearest)) nearest = p;
    }
    ++gamma(nearest, source.label(i));
  }
  return gamma;
}

Eigen::MatrixXd column_softmax(const CountMatrix& cooccurrence) {
  if (cooccurrence.rows() == 0) throw ValidationError("column softmax needs at least one row");
  Eigen::MatrixXd distribution(cooccurrence.rows(), cooccurrence.cols());
  for (Eigen::Index j = 0; j < cooccurrence.cols(); ++j) {
    const auto column = cooccurrence.col(j);
    const std::int64_t peak = column.maxCoeff();
    double total = 0.0;
    for (Eigen::Index i = 0; i < column.rows(); ++i) {
      distribution(i, j) = std::exp(static_cast<double>(column(i) - peak));
      total += distribution(i, j);
    }
    distribution.col(j) /= total;
  }
  return distribution;
}

MatchMatrix threshold_match(const Eigen::MatrixXd& distribution, double tau) {
  return (distribution.array() >= tau).cast<std::uint8_t>().matrix();
}

PrototypeSplit split_prototypes(const PrototypeBank& target_prototypes, const MatchMatrix& matches) {
  if (static_cast<std::size_t>(matches.rows()) != target_prototypes.count()) {
    throw ValidationError("match matrix has " + std::to_string(matches.rows()) + " rows for " +
                          std::to_string(target_prototypes.count()) + " prototypes");
  }
  PrototypeSplit split;
  collect_matches(matches, split.class_to_prototypes, split.unseen_indices);
  Eigen::MatrixXf unseen(static_cast<Eigen::Index>(target_prototypes.dim()),
                         static_cast<Eigen::Index>(split.unseen_indices.size()));
  for (std::size_t u = 0; u < split.unseen_indices.size(); ++u) {
    unseen.col(static_cast<Eigen::Index>(u)) = target_prototypes.column(split.unseen_indices[u]);
  }
  split.unseen = PrototypeBank(std::move(unseen), PrototypeKind::Unseen);
  return split;
}

PrototypeBank assemble_classifier(const PrototypeBank& seen, const PrototypeBank& unseen) {
  if (!unseen.empty() && seen.dim() != unseen.dim()) {
    throw ValidationError("seen prototypes have dimension " + std::to_string(seen.dim()) + ", unseen " +
                          std::to_string(unseen.dim()));
  }
  Eigen::MatrixXf combined(static_cast<Eigen::Index>(seen.dim()), static_cast<Eigen::Index>(seen.count() + unseen.count()));
  combined.leftCols(static_cast<Eigen::Index>(seen.count())) = seen.columns();
  if (!unseen.empty()) combined.rightCols(static_cast<Eigen::Index>(unseen.count())) = unseen.columns();
  return PrototypeBank(std::move(combined), PrototypeKind::Combined);
}

MatchResult match_from_cooccurrence(const CountMatrix& cooccurrence, double tau) {
  MatchResult result;
  result.cooccurrence = cooccurrence;
  result.distribution = column_softmax(cooccurrence);
  result.matches = threshold_match(result.distribution, tau);
  collect_matches(result.matches, result.class_to_prototypes, result.unseen_prototype_indices);
  return result;
}

MatchResult match_prototypes(const EmbeddingSet& source, const PrototypeBank& target_prototypes, double tau) {
  return match_from_cooccurrence(co_occurrence(source, target_prototypes), tau);
}

DistributionHistogram distribution_histogram(const Eigen::MatrixXd& distribution) {
  DistributionHistogram histogram;
  for (Eigen::Index i = 0; i < distribution.size(); ++i) {
    const double value = distribution.data()[i];
    auto bin = static_cast<std::size_t>(std::floor(value * 10.0));
    if (bin > 9) bin = 9;
    ++histogram.bins[bin];
    if (value < 0.02) ++histogram.below_0_02;
    if (value > 0.98) ++histogram.above_0_98;
  }
  return histogram;
}

}  // namespace owdisc
