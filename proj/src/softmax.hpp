#pragma once

#include <Eigen/Core>

namespace owdisc::detail {

// Row-wise softmax of `logits` restricted to the first `columns` entries;
// the remaining entries of the result are zero.
inline Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits, Eigen::Index columns) {
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const auto head = logits.row(i).head(columns);
    const double shift = head.maxCoeff();
    probs.row(i).head(columns) = (head.array() - shift).exp().matrix();
    probs.row(i).head(columns) /= probs.row(i).head(columns).sum();
  }
  return probs;
}

inline Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& logits) { return row_softmax(logits, logits.cols()); }

}  // namespace owdisc::detail
