#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <string>
#include <vector>

#include "otgrowth/errors.hpp"
#include "otgrowth/geometry.hpp"

namespace otgrowth {

struct WeightedPoints {
  PointSet points;
  std::vector<double> weights;

  static WeightedPoints uniform(PointSet pts) {
    const std::size_t n = pts.size();
    return {std::move(pts), std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0)};
  }

  bool has_uniform_weights() const {
    if (weights.empty()) return false;
    const double w = 1.0 / static_cast<double>(weights.size());
    for (double x : weights)
      if (std::abs(x - w) > 1e-15) return false;
    return true;
  }
};

enum class CouplingSolver { Assignment, NetworkSimplex, Sinkhorn };

inline const char* to_string(CouplingSolver s) {
  switch (s) {
    case CouplingSolver::Assignment: return "assignment";
    case CouplingSolver::NetworkSimplex: return "network-simplex";
    case CouplingSolver::Sinkhorn: return "sinkhorn";
  }
  return "?";
}

struct CouplingEntry {
  std::size_t i, j;
  double mass;
};

struct Coupling {
  std::size_t n_src = 0, n_tgt = 0;
  std::vector<CouplingEntry> entries;
  std::vector<double> u, v;  // dual potentials
  double cost = 0.0;
  CouplingSolver solver = CouplingSolver::Assignment;
  double epsilon = 0.0;
  std::size_t iterations = 0;
  double marginal_residual = 0.0;
};

inline std::vector<std::vector<double>> squared_distance_matrix(const PointSet& X, const PointSet& Y) {
  if (X.dim() != Y.dim()) throw DomainError("point sets differ in dimension");
  std::vector<std::vector<double>> c(X.size(), std::vector<double>(Y.size()));
  for (std::size_t i = 0; i < X.size(); ++i)
    for (std::size_t j = 0; j < Y.size(); ++j) c[i][j] = squared_distance(X.row(i), Y.row(j));
  return c;
}

inline void validate_marginal(const WeightedPoints& w, const char* side) {
  if (w.points.empty()) throw DomainError(std::string(side) + " point set is empty");
  if (w.weights.size() != w.points.size()) throw DomainError(std::string(side) + " weights/points size mismatch");
  double s = 0.0;
  for (double x : w.weights) {
    if (!(x >= 0.0)) throw DomainError(std::string(side) + " weights must be non-negative");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-12) throw DomainError(std::string(side) + " weights must sum to 1");
}

struct Certificate {
  double min_reduced_cost = 0.0;          // over all arcs
  double max_support_reduced_cost = 0.0;  // |c - u - v| on positive-mass arcs
  double marginal_residual = 0.0;         // L1, both sides
  bool optimal(double tol = 1e-9) const {
    return min_reduced_cost >= -tol && max_support_reduced_cost <= tol && marginal_residual <= tol;
  }
};

// Complementary-slackness certificate from the coupling's own duals.
inline Certificate certify(const Coupling& pi, const WeightedPoints& X, const WeightedPoints& Y) {
  const auto C = squared_distance_matrix(X.points, Y.points);
  Certificate cert;
  cert.min_reduced_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pi.n_src; ++i)
    for (std::size_t j = 0; j < pi.n_tgt; ++j)
      cert.min_reduced_cost = std::min(cert.min_reduced_cost, C[i][j] - pi.u[i] - pi.v[j]);
  std::vector<double> row(pi.n_src, 0.0), col(pi.n_tgt, 0.0);
  for (const auto& e : pi.entries) {
    row[e.i] += e.mass;
    col[e.j] += e.mass;
    if (e.mass > 0.0)
      cert.max_support_reduced_cost = std::max(cert.max_support_reduced_cost, std::abs(C[e.i][e.j] - pi.u[e.i] - pi.v[e.j]));
  }
  for (std::size_t i = 0; i < pi.n_src; ++i) cert.marginal_residual += std::abs(row[i] - X.weights[i]);
  for (std::size_t j = 0; j < pi.n_tgt; ++j) cert.marginal_residual += std::abs(col[j] - Y.weights[j]);
  return cert;
}

}  // namespace otgrowth
