#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "owdisc/embedding.hpp"

namespace owdisc {

struct ClassCounts {
  std::size_t total = 0;
  std::size_t hits = 0;
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

using IdPairs = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

struct SeenAccuracy {
  // nullopt when no target sample belongs to a seen class.
  std::optional<double> accuracy;
  std::map<std::uint32_t, ClassCounts> per_class;
};

struct UnseenAccuracy {
  double accuracy = 0.0;
  IdPairs hungarian_map;  // (predicted id, truth id)
  std::map<std::uint32_t, ClassCounts> per_class;
};

SeenAccuracy seen_accuracy(const PredictionSet& predictions, const Labels& truth, const ClassCatalog& catalog);

// Hungarian-matched accuracy over samples whose truth is unseen. Predictions
// into seen ids are never matched. Throws ValidationError when there are no
// unseen samples.
UnseenAccuracy unseen_accuracy(const PredictionSet& predictions, const Labels& truth, const ClassCatalog& catalog);

// Harmonic mean 2su/(s+u), 0 when s + u = 0.
double h_score(double seen, double unseen);

struct EvalReport {
  std::optional<double> seen_accuracy;
  std::optional<double> unseen_accuracy;
  // Only defined when both accuracies are.
  std::optional<double> h_score;
  std::size_t discovered_class_count = 0;
  IdPairs hungarian_map;
  std::map<std::uint32_t, ClassCounts> per_class;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport evaluate(const PredictionSet& predictions, const Labels& truth, const ClassCatalog& catalog);

struct ClusteringAccuracy {
  double accuracy = 0.0;
  IdPairs mapping;  // (cluster id, truth id)
};

// Best one-to-one relabeling of clusters onto truth classes, all ids alike.
ClusteringAccuracy clustering_accuracy(std::span<const std::uint32_t> clusters, std::span<const std::uint32_t> truth);

}  // namespace owdisc
