#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace owdisc {

using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Labels = std::vector<std::uint32_t>;

// Rows whose double-precision norm is within this distance of 1 are left
// untouched by normalization, which keeps save/load bitwise lossless.
inline constexpr double kUnitNormSlack = 1e-6;

// Scales every row of `rows` to unit L2 norm. Returns the index of the first
// zero-norm row (left unmodified) if any.
std::optional<std::size_t> normalize_rows(FloatMatrix& rows);

/// A set of n unit-norm embeddings of dimension d with optional integer labels.
///
/// Construction renormalizes rows and rejects zero rows, so every instance
/// satisfies the unit-norm contract. Instances are immutable.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(FloatMatrix vectors, std::optional<Labels> labels = std::nullopt);

  std::size_t count() const noexcept { return static_cast<std::size_t>(vectors_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }
  bool empty() const noexcept { return count() == 0; }

  const FloatMatrix& vectors() const noexcept { return vectors_; }
  auto row(std::size_t i) const { return vectors_.row(static_cast<Eigen::Index>(i)); }

  bool has_labels() const noexcept { return labels_.has_value(); }
  // Throws ValidationError when the set is unlabeled.
  const Labels& labels() const;
  std::uint32_t label(std::size_t i) const { return labels().at(i); }
  // max label + 1, or 0 for an empty or unlabeled set.
  std::size_t class_count() const noexcept;

  EmbeddingSet select(std::span<const std::size_t> rows) const;
  EmbeddingSet without_labels() const;

  friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b);

 private:
  FloatMatrix vectors_;
  std::optional<Labels> labels_;
};

// Row-wise concatenation; the result is labeled only if both inputs are.
EmbeddingSet concatenate(const EmbeddingSet& first, const EmbeddingSet& second);

struct ClassCatalog {
  std::size_t seen_count = 0;
  std::optional<std::size_t> target_count;

  // |C_t| - |C_s| when both are known and the difference is non-negative.
  std::optional<std::size_t> novel_count() const {
    if (!target_count || *target_count < seen_count) return std::nullopt;
    return *target_count - seen_count;
  }
};

// Ids below the seen count are seen classes, ids at or above it are
// discovered classes.
struct PredictionSet {
  std::vector<std::uint32_t> assignments;
  std::vector<float> confidences;

  std::size_t size() const noexcept { return assignments.size(); }
  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

}  // namespace owdisc
