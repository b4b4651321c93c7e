#pragma once

#include <cstddef>
#include <string_view>

#include <Eigen/Core>

namespace owdisc {

enum class PrototypeKind { Seen, Target, Unseen, Combined };

std::string_view to_string(PrototypeKind kind);
PrototypeKind parse_prototype_kind(std::string_view text);

inline constexpr double kPrototypeNormTolerance = 1e-5;

// d x k matrix of unit-norm columns. A bank may be empty (k = 0), which
// happens for the unseen bank when every target prototype is matched.
class PrototypeBank {
 public:
  PrototypeBank() = default;
  // Throws ValidationError if a column is not unit norm within tolerance.
  PrototypeBank(Eigen::MatrixXf columns, PrototypeKind kind);

  // Scales every column to unit norm; throws naming the first zero column.
  static PrototypeBank from_directions(const Eigen::MatrixXd& columns, PrototypeKind kind);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(columns_.rows()); }
  std::size_t count() const noexcept { return static_cast<std::size_t>(columns_.cols()); }
  bool empty() const noexcept { return count() == 0; }
  PrototypeKind kind() const noexcept { return kind_; }

  const Eigen::MatrixXf& columns() const noexcept { return columns_; }
  auto column(std::size_t i) const { return columns_.col(static_cast<Eigen::Index>(i)); }

  PrototypeBank with_kind(PrototypeKind kind) const { return PrototypeBank(columns_, kind); }

  friend bool operator==(const PrototypeBank& a, const PrototypeBank& b) {
    return a.kind_ == b.kind_ && a.columns_.rows() == b.columns_.rows() &&
           a.columns_.cols() == b.columns_.cols() && a.columns_ == b.columns_;
  }

 private:
  Eigen::MatrixXf columns_;
  PrototypeKind kind_ = PrototypeKind::Seen;
};

}  // namespace owdisc
