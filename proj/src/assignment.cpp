#include "owdisc/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "owdisc/errors.hpp"

namespace owdisc {
namespace {

// Shortest augmenting path with row/column potentials for rows <= cols.
// Returns, for every row, its assigned column.
std::vector<std::size_t> hungarian_rows_le_cols(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  const auto m = static_cast<std::size_t>(cost.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; index 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> owner(m + 1, 0), way(m + 1, 0);
  for (std::size_t row = 1; row <= n; ++row) {
    owner[0] = row;
    std::size_t col0 = 0;
    std::vector<double> min_slack(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[col0] = 1;
      const std::size_t row0 = owner[col0];
      double delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t col = 1; col <= m; ++col) {
        if (used[col]) continue;
        const double reduced = cost(static_cast<Eigen::Index>(row0 - 1), static_cast<Eigen::Index>(col - 1)) - u[row0] - v[col];
        if (reduced < min_slack[col]) {
          min_slack[col] = reduced;
          way[col] = col0;
        }
        if (min_slack[col] < delta) {
          delta = min_slack[col];
          col1 = col;
        }
      }
      for (std::size_t col = 0; col <= m; ++col) {
        if (used[col]) {
          u[owner[col]] += delta;
          v[col] -= delta;
        } else {
          min_slack[col] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t col = 1; col <= m; ++col) {
    if (owner[col] != 0) row_to_col[owner[col] - 1] = col - 1;
  }
  return row_to_col;
}

}  // namespace

AssignmentResult solve_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() == 0 || cost.cols() == 0) throw ValidationError("assignment needs a non-empty cost matrix");
  if (!cost.allFinite()) throw ValidationError("assignment cost matrix contains NaN or infinite entries");

  AssignmentResult result;
  if (cost.rows() <= cost.cols()) {
    const auto row_to_col = hungarian_rows_le_cols(cost);
    for (std::size_t r = 0; r < row_to_col.size(); ++r) result.mapping.emplace_back(r, row_to_col[r]);
  } else {
    const Eigen::MatrixXd transposed = cost.transpose();
    const auto col_to_row = hungarian_rows_le_cols(transposed);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t c = 0; c < col_to_row.size(); ++c) pairs.emplace_back(col_to_row[c], c);
    std::sort(pairs.begin(), pairs.end());
    result.mapping = std::move(pairs);
  }
  for (const auto& [r, c] : result.mapping) {
    result.total_cost += cost(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return result;
}

AssignmentResult solve_max_assignment(const Eigen::MatrixXd& score) {
  AssignmentResult result = solve_assignment(-score);
  result.total_cost = -result.total_cost;
  return result;
}

}  // namespace owdisc
