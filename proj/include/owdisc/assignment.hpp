#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace owdisc {

struct AssignmentResult {
  // (row, column) pairs sorted by row; injective on both sides.
  std::vector<std::pair<std::size_t, std::size_t>> mapping;
  // Sum of the selected cells of the input matrix.
  double total_cost = 0.0;
};

// Exact minimum-cost assignment of min(r, c) pairs (Hungarian method with
// potentials, O(min^2 * max)). Throws ValidationError on empty or non-finite
// input.
AssignmentResult solve_assignment(const Eigen::MatrixXd& cost);

// Maximum-score assignment; total_cost holds the selected score sum.
AssignmentResult solve_max_assignment(const Eigen::MatrixXd& score);

}  // namespace owdisc
