#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "owdisc/assignment.hpp"
#include "owdisc/errors.hpp"

using namespace owdisc;

namespace {

double exhaustive_square_minimum(const Eigen::MatrixXd& cost) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(cost.cols()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index i = 0; i < cost.rows(); ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("2x2 example") {
  Eigen::MatrixXd cost(2, 2);
  cost << 1, 2, 3, 0;
  const AssignmentResult r = solve_assignment(cost);
  CHECK(r.total_cost == 1.0);
  CHECK(r.mapping == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}});
}

TEST_CASE("zero diagonal is optimal") {
  Eigen::MatrixXd cost = Eigen::MatrixXd::Ones(5, 5) - Eigen::MatrixXd::Identity(5, 5);
  const AssignmentResult r = solve_assignment(cost);
  CHECK(r.total_cost == 0.0);
  for (const auto& [row, col] : r.mapping) CHECK(row == col);
}

TEST_CASE("random 6x6 integer costs match the 720-permutation minimum") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    Eigen::MatrixXd cost(6, 6);
    for (Eigen::Index i = 0; i < cost.size(); ++i) cost.data()[i] = static_cast<double>(rng() % 10);
    CHECK(solve_assignment(cost).total_cost == exhaustive_square_minimum(cost));
  }
}

TEST_CASE("rectangular problems assign the smaller side") {
  Eigen::MatrixXd wide(2, 3);
  wide << 5, 1, 9, 2, 8, 0;
  const AssignmentResult w = solve_assignment(wide);
  CHECK(w.total_cost == 1.0);
  CHECK(w.mapping == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}});

  const AssignmentResult t = solve_assignment(wide.transpose());
  CHECK(t.total_cost == 1.0);
  CHECK(t.mapping == std::vector<std::pair<std::size_t, std::size_t>>{{1, 0}, {2, 1}});
}

TEST_CASE("maximization and invalid input") {
  Eigen::MatrixXd score(2, 2);
  score << 1, 2, 3, 0;
  CHECK(solve_max_assignment(score).total_cost == 5.0);
  CHECK_THROWS_AS(solve_assignment(Eigen::MatrixXd(0, 0)), ValidationError);
  score(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_assignment(score), ValidationError);
}
