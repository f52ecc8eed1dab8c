#pragma once

// Dense min-cost assignment by shortest augmenting paths with potentials,
// O(n^2 m) for an n x m cost matrix with n <= m.

#include <limits>
#include <vector>

#include "otgrowth/errors.hpp"

namespace otgrowth {

struct AssignmentResult {
  std::vector<std::size_t> match;  // row -> column
  std::vector<double> u, v;        // c[i][j] - u[i] - v[j] >= 0, equality on matched pairs
  double total = 0.0;
};

inline AssignmentResult solve_assignment(const std::vector<std::vector<double>>& c) {
  const std::size_t n = c.size();
  if (n == 0) throw DomainError("solve_assignment: empty cost matrix");
  const std::size_t m = c[0].size();
  if (m < n) throw DomainError("solve_assignment needs at least as many columns as rows");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based internally; column 0 is the virtual start.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = c[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 == 0) throw SolverError("solve_assignment: no augmenting path (non-finite costs?)");
      for (std::size_t j = 0; j <= m; ++j) {
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
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  AssignmentResult r;
  r.match.assign(n, 0);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) r.match[p[j] - 1] = j - 1;
  r.u.assign(u.begin() + 1, u.end());
  r.v.assign(v.begin() + 1, v.end());
  for (std::size_t i = 0; i < n; ++i) r.total += c[i][r.match[i]];
  return r;
}

}  // namespace otgrowth
