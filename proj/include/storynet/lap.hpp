#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace storynet {

namespace detail {
std::vector<int> lap_solve_impl(const Eigen::MatrixXd& cost, bool maximize);
}

/// Optimal linear assignment. Returns, for every row, the assigned column
/// (-1 for rows left unassigned when there are more rows than columns).
/// Among optimal assignments the lexicographically smallest row->column
/// vector is returned, so results are deterministic under ties.
template <typename Derived>
std::vector<int> lap_solve(const Eigen::MatrixBase<Derived>& cost, bool maximize = false) {
  return detail::lap_solve_impl(cost.template cast<double>(), maximize);
}

/// Sum of cost(i, assignment[i]) over assigned rows, accumulated in row order.
template <typename Derived>
typename Derived::Scalar assignment_value(const Eigen::MatrixBase<Derived>& cost,
                                          std::span<const int> assignment) {
  typename Derived::Scalar total(0);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(assignment.size()); ++i)
    if (assignment[i] >= 0) total += cost(i, assignment[i]);
  return total;
}

}  // namespace storynet
