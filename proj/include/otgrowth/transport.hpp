#pragma once

// Reference transport maps: 1D monotone rearrangement, exact discrete OT for
// squared Euclidean cost, entropic OT, and the map-level invariant checks.

#include <set>
#include <vector>

#include "otgrowth/random.hpp"
#include "otgrowth/transport/assignment.hpp"
#include "otgrowth/transport/coupling.hpp"
#include "otgrowth/transport/discrete_map.hpp"
#include "otgrowth/transport/map1d.hpp"
#include "otgrowth/transport/network_simplex.hpp"
#include "otgrowth/transport/sinkhorn.hpp"

namespace otgrowth {

// Nudges exact duplicates of earlier rows by `scale` * max(1, |x|) in a
// seeded random direction. Returns the indices that moved.
inline std::vector<std::size_t> jitter_duplicates(PointSet& pts, std::uint64_t seed = 0, double scale = 1e-12) {
  std::vector<std::size_t> moved;
  std::set<std::vector<double>> seen;
  Engine eng = make_engine(seed, 0x6a17);
  std::normal_distribution<double> nd;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto r = pts.row(i);
    std::vector<double> row(r.begin(), r.end());
    while (seen.count(row)) {
      const double s = scale * std::max(1.0, norm(row));
      for (double& x : row) x += s * nd(eng);
      if (moved.empty() || moved.back() != i) moved.push_back(i);
    }
    std::copy(row.begin(), row.end(), r.begin());
    seen.insert(std::move(row));
  }
  return moved;
}

// Exact optimal coupling for |x - y|^2. Uniform weights with equal counts go
// through the assignment solver, anything else through the transportation
// simplex. Source duplicates should be jittered first if a map is wanted.
inline Coupling discrete_ot_exact(const WeightedPoints& X, const WeightedPoints& Y) {
  validate_marginal(X, "source");
  validate_marginal(Y, "target");
  const auto C = squared_distance_matrix(X.points, Y.points);
  const std::size_t n = X.points.size(), m = Y.points.size();
  Coupling out;
  out.n_src = n;
  out.n_tgt = m;
  if (n == m && X.has_uniform_weights() && Y.has_uniform_weights()) {
    const auto r = solve_assignment(C);
    const double w = 1.0 / static_cast<double>(n);
    out.solver = CouplingSolver::Assignment;
    // scale duals to the probability-weighted problem: sum_i w u_i + sum_j w v_j
    out.u.resize(n);
    out.v.resize(m);
    for (std::size_t i = 0; i < n; ++i) out.u[i] = r.u[i];
    for (std::size_t j = 0; j < m; ++j) out.v[j] = r.v[j];
    for (std::size_t i = 0; i < n; ++i) out.entries.push_back({i, r.match[i], w});
    out.cost = r.total * w;
    return out;
  }
  // exact mass balance for the simplex; mismatch is already below 1e-12
  std::vector<double> a = X.weights, b = Y.weights;
  double sa = 0.0, sb = 0.0;
  for (double x : a) sa += x;
  for (double x : b) sb += x;
  for (double& x : b) x *= sa / sb;
  const auto r = solve_transportation(C, a, b);
  out.solver = CouplingSolver::NetworkSimplex;
  out.iterations = r.pivots;
  out.u = r.u;
  out.v = r.v;
  for (const auto& cell : r.basis)
    if (cell.flow > 0.0) out.entries.push_back({cell.i, cell.j, cell.flow});
  out.cost = r.total;
  return out;
}

inline DiscreteMap exact_map(const PointSet& X, const PointSet& Y) {
  const auto pi = discrete_ot_exact(WeightedPoints::uniform(X), WeightedPoints::uniform(Y));
  return barycentric_map(pi, X, Y);
}

inline double diameter(const PointSet& Y) {
  double best = 0.0;
  for (std::size_t i = 0; i < Y.size(); ++i)
    for (std::size_t j = i + 1; j < Y.size(); ++j) best = std::max(best, squared_distance(Y.row(i), Y.row(j)));
  return std::sqrt(best);
}

}  // namespace otgrowth
