#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mcmot {

struct Assignment {
  std::vector<std::pair<int, int>> matches;  // (row, col), sorted by row
  std::vector<int> unmatched_tracks;         // rows
  std::vector<int> unmatched_detections;     // cols
};

namespace lap_detail {

/// Potentials-based shortest augmenting path solver.
/// Requires n <= m; returns the minimum total cost of matching every row
/// and fills row_to_col.
inline double solve_complete(const std::vector<std::vector<double>>& a, int n, int m,
                             std::vector<int>& row_to_col) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
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
  row_to_col.assign(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += a[i][row_to_col[i]];
  return total;
}

/// Minimum cost of a complete matching of the smaller side of the
/// sub-matrix selected by `rows` x `cols`.
inline double subproblem_value(const std::vector<std::vector<double>>& cost,
                               const std::vector<int>& rows, const std::vector<int>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(cols.size());
  std::vector<int> sol;
  if (n <= m) {
    std::vector<std::vector<double>> sub(n, std::vector<double>(m));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) sub[i][j] = cost[rows[i]][cols[j]];
    return solve_complete(sub, n, m, sol);
  }
  std::vector<std::vector<double>> sub(m, std::vector<double>(n));
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) sub[j][i] = cost[rows[i]][cols[j]];
  return solve_complete(sub, m, n, sol);
}

}  // namespace lap_detail

/// Minimum-cost one-to-one assignment over a rectangular cost matrix.
/// Exactly min(rows, cols) pairs are matched, then any matched pair whose
/// cost exceeds `gate` is demoted so both sides count as unmatched.
/// Among equal-cost optima the lexicographically smallest match list wins.
inline Assignment hungarian_assign(const std::vector<std::vector<double>>& cost, double gate) {
  const int rows = static_cast<int>(cost.size());
  const int cols = rows > 0 ? static_cast<int>(cost[0].size()) : 0;
  if (!std::isfinite(gate)) throw std::invalid_argument("hungarian_assign: gate must be finite");
  for (const auto& row : cost) {
    if (static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument("hungarian_assign: cost matrix is not rectangular");
    }
    for (double c : row) {
      if (!std::isfinite(c)) {
        throw std::invalid_argument("hungarian_assign: cost matrix has a non-finite entry");
      }
    }
  }

  Assignment out;
  if (rows == 0 || cols == 0) {
    out.unmatched_tracks.resize(rows);
    std::iota(out.unmatched_tracks.begin(), out.unmatched_tracks.end(), 0);
    out.unmatched_detections.resize(cols);
    std::iota(out.unmatched_detections.begin(), out.unmatched_detections.end(), 0);
    return out;
  }

  const int want = std::min(rows, cols);
  std::vector<int> all_rows(rows), all_cols(cols);
  std::iota(all_rows.begin(), all_rows.end(), 0);
  std::iota(all_cols.begin(), all_cols.end(), 0);
  const double best = lap_detail::subproblem_value(cost, all_rows, all_cols);
  const double tol = 1e-9 * (1.0 + std::abs(best));

  // Fix rows one by one, always picking the smallest column that still
  // extends to an optimal matching. This realizes the lexicographic
  // tie-break without disturbing optimality.
  std::vector<int> row_to_col(rows, -1);
  std::vector<int> free_cols = all_cols;
  double fixed_cost = 0.0;
  int fixed_count = 0;
  for (int i = 0; i < rows; ++i) {
    std::vector<int> rest_rows;
    rest_rows.reserve(rows - i - 1);
    for (int r = i + 1; r < rows; ++r) rest_rows.push_back(r);
    bool placed = false;
    for (std::size_t jj = 0; jj < free_cols.size(); ++jj) {
      const int j = free_cols[jj];
      std::vector<int> rest_cols;
      rest_cols.reserve(free_cols.size() - 1);
      for (int c : free_cols)
        if (c != j) rest_cols.push_back(c);
      const int tail = static_cast<int>(std::min(rest_rows.size(), rest_cols.size()));
      if (fixed_count + 1 + tail != want) continue;
      const double rest = lap_detail::subproblem_value(cost, rest_rows, rest_cols);
      if (fixed_cost + cost[i][j] + rest <= best + tol) {
        row_to_col[i] = j;
        fixed_cost += cost[i][j];
        ++fixed_count;
        free_cols.erase(free_cols.begin() + jj);
        placed = true;
        break;
      }
    }
    if (!placed) {
      const int tail = static_cast<int>(std::min(rest_rows.size(), free_cols.size()));
      if (fixed_count + tail != want) {
        throw std::logic_error("hungarian_assign: refinement lost feasibility");
      }
    }
  }

  for (int i = 0; i < rows; ++i) {
    if (row_to_col[i] >= 0 && cost[i][row_to_col[i]] > gate) row_to_col[i] = -1;
  }
  std::vector<char> col_used(cols, 0);
  for (int i = 0; i < rows; ++i) {
    if (row_to_col[i] >= 0) {
      out.matches.emplace_back(i, row_to_col[i]);
      col_used[row_to_col[i]] = 1;
    } else {
      out.unmatched_tracks.push_back(i);
    }
  }
  for (int j = 0; j < cols; ++j) {
    if (!col_used[j]) out.unmatched_detections.push_back(j);
  }
  return out;
}

}  // namespace mcmot
