#include "owdisc/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "owdisc/errors.hpp"

namespace owdisc {

std::optional<std::size_t> normalize_rows(FloatMatrix& rows) {
  std::optional<std::size_t> first_zero;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).cast<double>().norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      if (!first_zero) first_zero = static_cast<std::size_t>(i);
      continue;
    }
    if (std::abs(norm - 1.0) <= kUnitNormSlack) continue;
    rows.row(i) = (rows.row(i).cast<double>() / norm).cast<float>();
  }
  return first_zero;
}

EmbeddingSet::EmbeddingSet(FloatMatrix vectors, std::optional<Labels> labels)
    : vectors_(std::move(vectors)), labels_(std::move(labels)) {
  if (vectors_.rows() > 0 && vectors_.cols() == 0) {
    throw ValidationError("embedding dimension must be positive");
  }
  if (labels_ && labels_->size() != count()) {
    throw ValidationError("label count " + std::to_string(labels_->size()) + " does not match row count " +
                          std::to_string(count()));
  }
  if (auto zero = normalize_rows(vectors_)) {
    throw ValidationError("row " + std::to_string(*zero) + " has zero or non-finite norm");
  }
}

const Labels& EmbeddingSet::labels() const {
  if (!labels_) throw ValidationError("embedding set has no labels");
  return *labels_;
}

std::size_t EmbeddingSet::class_count() const noexcept {
  if (!labels_ || labels_->empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels_->begin(), labels_->end())) + 1;
}

EmbeddingSet EmbeddingSet::select(std::span<const std::size_t> rows) const {
  FloatMatrix picked(static_cast<Eigen::Index>(rows.size()), vectors_.cols());
  std::optional<Labels> picked_labels;
  if (labels_) picked_labels.emplace(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= count()) throw ValidationError("row index " + std::to_string(rows[r]) + " out of range");
    picked.row(static_cast<Eigen::Index>(r)) = vectors_.row(static_cast<Eigen::Index>(rows[r]));
    if (labels_) (*picked_labels)[r] = (*labels_)[rows[r]];
  }
  return EmbeddingSet(std::move(picked), std::move(picked_labels));
}

EmbeddingSet EmbeddingSet::without_labels() const { return EmbeddingSet(vectors_, std::nullopt); }

bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
  if (a.vectors_.rows() != b.vectors_.rows() || a.vectors_.cols() != b.vectors_.cols()) return false;
  return a.labels_ == b.labels_ && a.vectors_ == b.vectors_;
}

EmbeddingSet concatenate(const EmbeddingSet& first, const EmbeddingSet& second) {
  if (first.empty()) return second;
  if (second.empty()) return first;
  if (first.dim() != second.dim()) {
    throw ValidationError("cannot concatenate sets of dimension " + std::to_string(first.dim()) + " and " +
                          std::to_string(second.dim()));
  }
  FloatMatrix joined(static_cast<Eigen::Index>(first.count() + second.count()), first.vectors().cols());
  joined << first.vectors(), second.vectors();
  std::optional<Labels> labels;
  if (first.has_labels() && second.has_labels()) {
    labels = first.labels();
    labels->insert(labels->end(), second.labels().begin(), second.labels().end());
  }
  return EmbeddingSet(std::move(joined), std::move(labels));
}

}  // namespace owdisc
