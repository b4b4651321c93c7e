#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "owdisc/embedding.hpp"
#include "owdisc/prototype_bank.hpp"

namespace owdisc {

struct KMeansParams {
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  // Absolute inertia improvement below which Lloyd iterations stop.
  double tol = 1e-6;
  // Independent k-means++ seedings; the lowest-inertia run is kept.
  std::size_t restarts = 1;
};

struct KMeansResult {
  Eigen::MatrixXd centroids;  // k x d
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  std::size_t iterations_run = 0;
  // Inertia after every assignment step of the returned run.
  std::vector<double> inertia_history;
};

/// Lloyd's algorithm from greedy k-means++ seeds on squared Euclidean distance.
///
/// Distance ties go to the lowest cluster index. Empty clusters are refilled
/// with the point of the largest cluster farthest from its centroid, so every
/// returned cluster is non-empty. Bitwise reproducible for a fixed seed.
KMeansResult kmeans_fit(const FloatMatrix& points, std::size_t k, const KMeansParams& params = {});
KMeansResult kmeans_fit(const EmbeddingSet& points, std::size_t k, const KMeansParams& params = {});

// Projects every centroid onto the unit sphere, preserving order.
PrototypeBank normalize_centroids(const KMeansResult& result);

}  // namespace owdisc
