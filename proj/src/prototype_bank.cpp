#include "owdisc/prototype_bank.hpp"

#include <cmath>
#include <string>

#include "owdisc/errors.hpp"

namespace owdisc {

std::string_view to_string(PrototypeKind kind) {
  switch (kind) {
    case PrototypeKind::Seen: return "seen";
    case PrototypeKind::Target: return "target";
    case PrototypeKind::Unseen: return "unseen";
    case PrototypeKind::Combined: return "combined";
  }
  return "seen";
}

PrototypeKind parse_prototype_kind(std::string_view text) {
  if (text == "seen") return PrototypeKind::Seen;
  if (text == "target") return PrototypeKind::Target;
  if (text == "unseen") return PrototypeKind::Unseen;
  if (text == "combined") return PrototypeKind::Combined;
  throw ValidationError("unknown prototype kind '" + std::string(text) + "'");
}

PrototypeBank::PrototypeBank(Eigen::MatrixXf columns, PrototypeKind kind) : columns_(std::move(columns)), kind_(kind) {
  for (Eigen::Index j = 0; j < columns_.cols(); ++j) {
    const double norm = columns_.col(j).cast<double>().norm();
    if (!(std::abs(norm - 1.0) <= kPrototypeNormTolerance)) {
      throw ValidationError("prototype column " + std::to_string(j) + " has norm " + std::to_string(norm));
    }
  }
}

PrototypeBank PrototypeBank::from_directions(const Eigen::MatrixXd& columns, PrototypeKind kind) {
  Eigen::MatrixXf unit(columns.rows(), columns.cols());
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    const double norm = columns.col(j).norm();
    if (!(norm > 1e-12) || !std::isfinite(norm)) {
      throw ValidationError("prototype " + std::to_string(j) + " has zero norm and cannot be normalized");
    }
    unit.col(j) = (columns.col(j) / norm).cast<float>();
  }
  return PrototypeBank(std::move(unit), kind);
}

}  // namespace owdisc
