#include "owdisc/kmeans.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "owdisc/errors.hpp"
#include "random.hpp"

namespace owdisc {
namespace {

using RowMatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double squared_distance(const RowMatrixD& points, Eigen::Index i, const Eigen::MatrixXd& centroids, Eigen::Index c) {
  return (points.row(i) - centroids.row(c)).squaredNorm();
}

std::size_t sample_weighted(const std::vector<double>& weights, double total, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, total);
  const double target = uniform(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (acc > target) return i;
  }
  return last_positive;
}

// Greedy k-means++: each new center is the best of 2 + floor(ln k) D^2-weighted
// candidates.
Eigen::MatrixXd seed_centroids(const RowMatrixD& points, std::size_t k, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(points.rows());
  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), points.cols());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  centroids.row(0) = points.row(static_cast<Eigen::Index>(first));

  std::vector<double> closest(n);
  double potential = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    closest[i] = squared_distance(points, static_cast<Eigen::Index>(i), centroids, 0);
    potential += closest[i];
  }
  const std::size_t trials = 2 + static_cast<std::size_t>(std::floor(std::log(static_cast<double>(k))));
  std::vector<double> candidate_closest(n);
  std::vector<double> best_closest(n);
  for (std::size_t c = 1; c < k; ++c) {
    if (!(potential > 0.0)) {
      // Every point coincides with a chosen center; any point will do.
      centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick(rng)));
      continue;
    }
    double best_potential = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t candidate = sample_weighted(closest, potential, rng);
      double candidate_potential = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(candidate)))
                             .squaredNorm();
        candidate_closest[i] = std::min(closest[i], d);
        candidate_potential += candidate_closest[i];
      }
      if (candidate_potential < best_potential) {
        best_potential = candidate_potential;
        best = candidate;
        best_closest.swap(candidate_closest);
      }
    }
    centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(best));
    closest = best_closest;
    potential = best_potential;
  }
  return centroids;
}

// Nearest centroid per point (ties to the lowest index); returns the inertia.
double assign_points(const RowMatrixD& points, const Eigen::MatrixXd& centroids, std::vector<std::size_t>& assignments) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(points, i, centroids, c);
      if (d < best) {
        best = d;
        best_c = static_cast<std::size_t>(c);
      }
    }
    assignments[static_cast<std::size_t>(i)] = best_c;
    inertia += best;
  }
  return inertia;
}

void recompute_mean(const RowMatrixD& points, const std::vector<std::size_t>& assignments, std::size_t cluster,
                    Eigen::MatrixXd& centroids) {
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(points.cols());
  std::size_t members = 0;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != cluster) continue;
    sum += points.row(static_cast<Eigen::Index>(i));
    ++members;
  }
  if (members > 0) centroids.row(static_cast<Eigen::Index>(cluster)) = sum / static_cast<double>(members);
}

// Means of the current assignment; empty clusters take the farthest member of
// the currently largest cluster.
void update_centroids(const RowMatrixD& points, std::vector<std::size_t>& assignments, Eigen::MatrixXd& centroids) {
  const auto k = static_cast<std::size_t>(centroids.rows());
  std::vector<std::size_t> sizes(k, 0);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(centroids.rows(), centroids.cols());
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    sums.row(static_cast<Eigen::Index>(assignments[i])) += points.row(static_cast<Eigen::Index>(i));
    ++sizes[assignments[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] > 0) centroids.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
  }
  for (std::size_t empty = 0; empty < k; ++empty) {
    if (sizes[empty] > 0) continue;
    std::size_t largest = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (sizes[c] > sizes[largest]) largest = c;
    }
    std::size_t farthest = 0;
    double farthest_d = -1.0;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] != largest) continue;
      const double d = squared_distance(points, static_cast<Eigen::Index>(i), centroids, static_cast<Eigen::Index>(largest));
      if (d > farthest_d) {
        farthest_d = d;
        farthest = i;
      }
    }
    assignments[farthest] = empty;
    --sizes[largest];
    ++sizes[empty];
    centroids.row(static_cast<Eigen::Index>(empty)) = points.row(static_cast<Eigen::Index>(farthest));
    recompute_mean(points, assignments, largest, centroids);
  }
}

KMeansResult lloyd(const RowMatrixD& points, std::size_t k, const KMeansParams& params, std::mt19937_64& rng) {
  KMeansResult result;
  result.centroids = seed_centroids(points, k, rng);
  result.assignments.assign(static_cast<std::size_t>(points.rows()), k);
  std::vector<std::size_t> previous;
  double previous_inertia = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= params.max_iter; ++it) {
    previous = result.assignments;
    const double inertia = assign_points(points, result.centroids, result.assignments);
    result.inertia_history.push_back(inertia);
    const bool unchanged = previous == result.assignments;
    update_centroids(points, result.assignments, result.centroids);
    result.iterations_run = it;
    if (unchanged || previous_inertia - inertia < params.tol) break;
    previous_inertia = inertia;
  }
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    inertia += squared_distance(points, i, result.centroids,
                                static_cast<Eigen::Index>(result.assignments[static_cast<std::size_t>(i)]));
  }
  result.inertia = inertia;
  return result;
}

}  // namespace

KMeansResult kmeans_fit(const FloatMatrix& points, std::size_t k, const KMeansParams& params) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0) throw ValidationError("k-means needs k >= 1");
  if (k > n) throw ValidationError("k-means k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " points");
  if (params.max_iter == 0) throw ValidationError("k-means max_iter must be positive");
  if (params.restarts == 0) throw ValidationError("k-means restarts must be positive");

  const RowMatrixD data = points.cast<double>();
  KMeansResult best;
  for (std::size_t r = 0; r < params.restarts; ++r) {
    auto rng = detail::make_rng(params.seed, detail::kStreamKMeans + (r << 8));
    KMeansResult run = lloyd(data, k, params, rng);
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

KMeansResult kmeans_fit(const EmbeddingSet& points, std::size_t k, const KMeansParams& params) {
  return kmeans_fit(points.vectors(), k, params);
}

PrototypeBank normalize_centroids(const KMeansResult& result) {
  for (Eigen::Index c = 0; c < result.centroids.rows(); ++c) {
    if (!(result.centroids.row(c).norm() > 1e-12)) {
      throw ValidationError("cluster " + std::to_string(c) + " has a zero-norm centroid");
    }
  }
  return PrototypeBank::from_directions(result.centroids.transpose(), PrototypeKind::Target);
}

}  // namespace owdisc
