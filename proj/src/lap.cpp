#include "storynet/lap.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace storynet::detail {

namespace {

struct HungarianResult {
  std::vector<int> row_to_col;
  Eigen::VectorXd u, v;  // duals: cost(i,j) - u(i) - v(j) >= 0
};

// Shortest augmenting path Hungarian method on a square matrix, O(n^3).
HungarianResult hungarian(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  HungarianResult r;
  r.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j]) r.row_to_col[p[j] - 1] = j - 1;
  r.u.resize(n);
  r.v.resize(n);
  for (int i = 0; i < n; ++i) {
    r.u(i) = u[i + 1];
    r.v(i) = v[i + 1];
  }
  return r;
}

// Every optimal assignment lives on the tight edges of an optimal dual.
// Walk rows in order and move each one to the smallest tight column that
// still admits a perfect matching of the unfixed rows.
void lexicographic_refine(const Eigen::MatrixXd& c, const HungarianResult& h, int rows_of_interest,
                          std::vector<int>& match) {
  const int n = static_cast<int>(c.rows());
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  const double eps = 1e-10 * scale;

  std::vector<std::vector<int>> tight(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (c(i, j) - h.u(i) - h.v(j) <= eps) tight[i].push_back(j);

  std::vector<int> owner(n);
  for (int i = 0; i < n; ++i) owner[match[i]] = i;

  std::vector<int> came_from(n);
  for (int i = 0; i < rows_of_interest; ++i) {
    const int current = match[i];
    for (int j : tight[i]) {
      if (j >= current) break;
      const int r = owner[j];
      if (r < i) continue;  // held by a fixed row
      // Search an alternating path r -> ... -> current through unfixed rows.
      std::fill(came_from.begin(), came_from.end(), -1);
      std::deque<int> queue{r};
      bool found = false;
      while (!queue.empty() && !found) {
        const int x = queue.front();
        queue.pop_front();
        for (int y : tight[x]) {
          if (y == j || came_from[y] >= 0) continue;
          if (y != current && owner[y] <= i) continue;
          came_from[y] = x;
          if (y == current) {
            found = true;
            break;
          }
          queue.push_back(owner[y]);
        }
      }
      if (!found) continue;
      int y = current;
      while (true) {
        const int x = came_from[y];
        const int previous = match[x];
        match[x] = y;
        owner[y] = x;
        if (x == r) break;
        y = previous;
      }
      match[i] = j;
      owner[j] = i;
      break;
    }
  }
}

}  // namespace

std::vector<int> lap_solve_impl(const Eigen::MatrixXd& cost, bool maximize) {
  if (!cost.allFinite()) throw std::invalid_argument("lap_solve: cost matrix has non-finite entries");
  const Eigen::Index rows = cost.rows(), cols = cost.cols();
  if (rows == 0 || cols == 0) return std::vector<int>(rows, -1);
  if (rows > cols) {
    const auto transposed = lap_solve_impl(cost.transpose(), maximize);
    std::vector<int> out(rows, -1);
    for (Eigen::Index j = 0; j < cols; ++j) out[transposed[j]] = static_cast<int>(j);
    return out;
  }
  // Square up with zero-cost dummy rows placed after the real ones.
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(cols, cols);
  c.topRows(rows) = maximize ? Eigen::MatrixXd(-cost) : cost;
  const HungarianResult h = hungarian(c);
  std::vector<int> match = h.row_to_col;
  lexicographic_refine(c, h, static_cast<int>(rows), match);
  match.resize(rows);
  return match;
}

}  // namespace storynet::detail
