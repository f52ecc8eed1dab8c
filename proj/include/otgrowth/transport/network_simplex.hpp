#pragma once

// Transportation simplex on the complete bipartite graph: northwest-corner
// start, Dantzig pricing, spanning-tree basis of n + m - 1 cells.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "otgrowth/errors.hpp"

namespace otgrowth {

struct TransportationResult {
  struct Cell {
    std::size_t i, j;
    double flow;
  };
  std::vector<Cell> basis;
  std::vector<double> u, v;
  double total = 0.0;
  std::size_t pivots = 0;
};

inline TransportationResult solve_transportation(const std::vector<std::vector<double>>& c, std::vector<double> a,
                                                 std::vector<double> b, std::size_t max_pivots = 0) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0 || c.size() != n) throw DomainError("solve_transportation: shape mismatch");
  if (max_pivots == 0) max_pivots = 50 * n * m + 1000;

  using Cell = TransportationResult::Cell;
  std::vector<Cell> basis;
  basis.reserve(n + m - 1);
  {
    std::size_t i = 0, j = 0;
    while (true) {
      const double x = std::min(a[i], b[j]);
      basis.push_back({i, j, x});
      a[i] -= x;
      b[j] -= x;
      if (i == n - 1 && j == m - 1) break;
      if (j == m - 1 || (i < n - 1 && a[i] <= b[j])) ++i;
      else ++j;
    }
  }

  double cmax = 0.0;
  for (const auto& row : c)
    for (double x : row) cmax = std::max(cmax, std::abs(x));
  const double price_tol = 1e-13 * std::max(1.0, cmax);

  std::vector<double> u(n), v(m);
  // node k < n is row k, node n + j is column j
  std::vector<std::vector<std::size_t>> adj(n + m);
  std::vector<std::size_t> parent_edge(n + m);
  std::vector<char> seen(n + m);
  auto rebuild_adj = [&] {
    for (auto& l : adj) l.clear();
    for (std::size_t e = 0; e < basis.size(); ++e) {
      adj[basis[e].i].push_back(e);
      adj[n + basis[e].j].push_back(e);
    }
  };
  auto other = [&](std::size_t e, std::size_t node) {
    return node < n ? n + basis[e].j : basis[e].i;
  };
  // BFS from root over the basis tree, recording the edge to each parent
  auto bfs = [&](std::size_t root) {
    std::fill(seen.begin(), seen.end(), 0);
    std::queue<std::size_t> q;
    q.push(root);
    seen[root] = 1;
    while (!q.empty()) {
      const std::size_t k = q.front();
      q.pop();
      for (std::size_t e : adj[k]) {
        const std::size_t o = other(e, k);
        if (seen[o]) continue;
        seen[o] = 1;
        parent_edge[o] = e;
        if (o < n) u[o] = c[o][basis[e].j] - v[basis[e].j];
        else v[o - n] = c[basis[e].i][o - n] - u[basis[e].i];
        q.push(o);
      }
    }
    for (char s : seen)
      if (!s) throw SolverError("solve_transportation: basis is not a spanning tree");
  };

  TransportationResult res;
  for (;; ++res.pivots) {
    rebuild_adj();
    u[0] = 0.0;
    bfs(0);

    double best = -price_tol;
    std::size_t ei = n, ej = m;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double r = c[i][j] - u[i] - v[j];
        if (r < best) {
          best = r;
          ei = i;
          ej = j;
        }
      }
    if (ei == n) break;
    if (res.pivots >= max_pivots) {
      std::ostringstream os;
      os << "solve_transportation: no convergence after " << res.pivots << " pivots; most negative reduced cost "
         << best << " at (" << ei << ", " << ej << ")";
      throw SolverError(os.str());
    }

    // tree path from column ej back to row ei (tree rooted at ei)
    bfs(ei);
    std::vector<std::size_t> path;  // edges from column ej towards ei
    for (std::size_t k = n + ej; k != ei;) {
      const std::size_t e = parent_edge[k];
      path.push_back(e);
      k = other(e, k);
    }
    // entering cell gains theta; path edges alternate -, +, -, ...
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = path.size();
    for (std::size_t k = 0; k < path.size(); k += 2)
      if (basis[path[k]].flow < theta) {
        theta = basis[path[k]].flow;
        leave = k;
      }
    for (std::size_t k = 0; k < path.size(); ++k) basis[path[k]].flow += (k % 2 == 0 ? -theta : theta);
    const std::size_t le = path[leave];
    basis[le] = {ei, ej, theta};
  }

  res.u = u;
  res.v = v;
  for (const auto& cell : basis) res.total += cell.flow * c[cell.i][cell.j];
  res.basis = std::move(basis);
  return res;
}

}  // namespace otgrowth
