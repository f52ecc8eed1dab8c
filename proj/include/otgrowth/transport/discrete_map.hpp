#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "otgrowth/errors.hpp"
#include "otgrowth/geometry.hpp"
#include "otgrowth/transport/coupling.hpp"
#include "otgrowth/transport/map1d.hpp"

namespace otgrowth {

enum class MapProvenance { ExactLP, SinkhornBarycentric };

inline const char* to_string(MapProvenance p) {
  return p == MapProvenance::ExactLP ? "exact-lp" : "sinkhorn-barycentric";
}

struct DiscreteMap {
  PointSet sources;
  PointSet images;
  MapProvenance provenance = MapProvenance::ExactLP;
  double epsilon = 0.0;
  std::size_t iterations = 0;
  double marginal_residual = 0.0;

  std::size_t size() const { return sources.size(); }
};

// T(x_i) = sum_j pi_ij y_j / sum_j pi_ij. Single-entry rows copy y_j as is.
inline DiscreteMap barycentric_map(const Coupling& pi, const PointSet& X, const PointSet& Y) {
  if (X.size() != pi.n_src || Y.size() != pi.n_tgt) throw DomainError("barycentric_map: coupling shape mismatch");
  const std::size_t d = Y.dim();
  std::vector<double> mass(X.size(), 0.0);
  std::vector<std::size_t> count(X.size(), 0), last(X.size(), 0);
  std::vector<double> acc(X.size() * d, 0.0);
  for (const auto& e : pi.entries) {
    if (!(e.mass > 0.0)) continue;
    mass[e.i] += e.mass;
    ++count[e.i];
    last[e.i] = e.j;
    const auto y = Y.row(e.j);
    for (std::size_t k = 0; k < d; ++k) acc[e.i * d + k] += e.mass * y[k];
  }
  DiscreteMap map;
  map.sources = X;
  map.images = PointSet(0, static_cast<int>(d));
  map.provenance = pi.solver == CouplingSolver::Sinkhorn ? MapProvenance::SinkhornBarycentric : MapProvenance::ExactLP;
  map.epsilon = pi.epsilon;
  map.iterations = pi.iterations;
  map.marginal_residual = pi.marginal_residual;
  std::vector<double> t(d);
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (count[i] == 0) throw DegenerateRow("barycentric_map: source " + std::to_string(i) + " carries no mass");
    if (count[i] == 1) {
      map.images.push_back(Y.row(last[i]));
      continue;
    }
    for (std::size_t k = 0; k < d; ++k) t[k] = acc[i * d + k] / mass[i];
    map.images.push_back(t);
  }
  return map;
}

struct MonotoneViolation {
  std::size_t i, j;
  double value;
};

struct MonotoneReport {
  std::size_t pairs_checked = 0;
  std::vector<MonotoneViolation> violations;
  double worst = std::numeric_limits<double>::infinity();  // min over pairs
  bool ok() const { return violations.empty(); }
};

// <T(x_j) - T(x_i), x_j - x_i> over all unordered pairs (the form is symmetric).
inline MonotoneReport check_monotone(const DiscreteMap& map, double tol = 1e-9) {
  if (map.size() < 2) throw DomainError("check_monotone needs at least two pairs");
  MonotoneReport r;
  const std::size_t d = map.sources.dim();
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto xi = map.sources.row(i), ti = map.images.row(i);
    for (std::size_t j = i + 1; j < map.size(); ++j) {
      const auto xj = map.sources.row(j), tj = map.images.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += (tj[k] - ti[k]) * (xj[k] - xi[k]);
      ++r.pairs_checked;
      r.worst = std::min(r.worst, s);
      if (s < -tol) r.violations.push_back({i, j, s});
    }
  }
  return r;
}

inline DiscreteMap sampled_map(const Map1D& map) {
  DiscreteMap out;
  out.sources = PointSet(0, 1);
  out.images = PointSet(0, 1);
  for (std::size_t i = 0; i < map.grid.size(); ++i) {
    out.sources.push_back(std::span<const double>(&map.grid[i], 1));
    out.images.push_back(std::span<const double>(&map.values[i], 1));
  }
  return out;
}

inline MonotoneReport check_monotone(const Map1D& map, double tol = 1e-9) { return check_monotone(sampled_map(map), tol); }

struct ConeReport {
  std::size_t anchor = 0;
  double lambda = 0.0;
  std::size_t points_in_ball = 0;
  std::vector<MonotoneViolation> violations;  // (anchor, j, f)
  double worst = std::numeric_limits<double>::infinity();
  bool ok() const { return violations.empty(); }
};

// f(z) = 2/3 <z - T(x), u> + |z - T(x)|/3 with u = T(x)/|T(x)|, evaluated at
// z = T(x_j) for every x_j in B(x + 2 lambda u, lambda).
inline double cone_value(std::span<const double> z, std::span<const double> tx, std::span<const double> u) {
  double ip = 0.0, nn = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double w = z[k] - tx[k];
    ip += w * u[k];
    nn += w * w;
  }
  return 2.0 / 3.0 * ip + std::sqrt(nn) / 3.0;
}

inline ConeReport check_cone_inclusion(const DiscreteMap& map, std::size_t x_index, double lambda, double tol = 1e-9) {
  if (x_index >= map.size()) throw DomainError("check_cone_inclusion: anchor index out of range");
  if (!(lambda > 0.0)) throw DomainError("check_cone_inclusion needs lambda > 0");
  const std::size_t d = map.sources.dim();
  const auto x = map.sources.row(x_index), tx = map.images.row(x_index);
  const double tn = norm(tx);
  if (tn == 0.0) throw DirectionUndefined("check_cone_inclusion: T(x) = 0 at anchor " + std::to_string(x_index));
  Point u(d), c(d);
  for (std::size_t k = 0; k < d; ++k) {
    u[k] = tx[k] / tn;
    c[k] = x[k] + 2.0 * lambda * u[k];
  }
  ConeReport r;
  r.anchor = x_index;
  r.lambda = lambda;
  for (std::size_t j = 0; j < map.size(); ++j) {
    if (squared_distance(map.sources.row(j), c) > lambda * lambda) continue;
    ++r.points_in_ball;
    const double f = cone_value(map.images.row(j), tx, u);
    r.worst = std::min(r.worst, f);
    if (f < -tol) r.violations.push_back({x_index, j, f});
  }
  return r;
}

}  // namespace otgrowth
