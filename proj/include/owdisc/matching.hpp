#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "owdisc/embedding.hpp"
#include "owdisc/prototype_bank.hpp"

namespace owdisc {

// Rows index target prototypes, columns index seen classes.
using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using MatchMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Gamma[i][j] = number of source samples of class j whose nearest prototype
// (largest dot product, ties to the lowest index) is prototype i.
CountMatrix co_occurrence(const EmbeddingSet& source, const PrototypeBank& target_prototypes);

// Column-wise softmax with per-column max subtraction.
Eigen::MatrixXd column_softmax(const CountMatrix& cooccurrence);

// M[i][j] = 1 iff D[i][j] >= tau.
MatchMatrix threshold_match(const Eigen::MatrixXd& distribution, double tau);

struct PrototypeSplit {
  // For every seen class, the prototypes matched to it (may be empty or
  // contain several).
  std::vector<std::vector<std::size_t>> class_to_prototypes;
  // Prototypes with an all-zero row in M, ascending.
  std::vector<std::size_t> unseen_indices;
  PrototypeBank unseen;
};

PrototypeSplit split_prototypes(const PrototypeBank& target_prototypes, const MatchMatrix& matches);

// Columns of `seen` followed by columns of `unseen`.
PrototypeBank assemble_classifier(const PrototypeBank& seen, const PrototypeBank& unseen);

struct MatchResult {
  CountMatrix cooccurrence;
  Eigen::MatrixXd distribution;
  MatchMatrix matches;
  std::vector<std::size_t> unseen_prototype_indices;
  std::vector<std::vector<std::size_t>> class_to_prototypes;

  std::size_t prototype_count() const noexcept { return static_cast<std::size_t>(matches.rows()); }
  std::size_t matched_count() const noexcept { return prototype_count() - unseen_prototype_indices.size(); }
};

// Gamma -> D -> M -> split, in that order.
MatchResult match_prototypes(const EmbeddingSet& source, const PrototypeBank& target_prototypes, double tau);
MatchResult match_from_cooccurrence(const CountMatrix& cooccurrence, double tau);

struct DistributionHistogram {
  // Ten equal-width bins over [0, 1]; 1.0 falls in the last bin.
  std::array<std::size_t, 10> bins{};
  std::size_t below_0_02 = 0;
  std::size_t above_0_98 = 0;
};

DistributionHistogram distribution_histogram(const Eigen::MatrixXd& distribution);

}  // namespace owdisc
