#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "otgrowth/errors.hpp"
#include "otgrowth/measures.hpp"

namespace otgrowth {

// Monotone rearrangement T = quantile_nu o cdf_mu sampled on a grid, with
// piecewise-linear interpolation between grid points.
struct Map1D {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> source_cdf;  // cdf_mu(grid)

  double operator()(double x) const {
    if (grid.empty()) throw DomainError("empty 1D map");
    if (grid.size() == 1 || x <= grid.front()) return values.front();
    if (x >= grid.back()) return values.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - grid.begin());
    const double t = (x - grid[k - 1]) / (grid[k] - grid[k - 1]);
    return values[k - 1] + t * (values[k] - values[k - 1]);
  }

  bool strictly_increasing() const {
    for (std::size_t i = 1; i < values.size(); ++i)
      if (!(values[i] > values[i - 1])) return false;
    return true;
  }
};

// mu-quantiles at n probability levels evenly spaced in [p_min, 1 - p_min].
inline std::vector<double> default_grid_1d(const DensityModel& mu, std::size_t n = 2001, double p_min = 1e-6) {
  if (n < 1) throw DomainError("grid needs at least one point");
  if (!(p_min > 0.0 && p_min < 0.5)) throw DomainError("p_min must lie in (0, 1/2)");
  std::vector<double> grid;
  grid.reserve(n);
  if (n == 1) {
    grid.push_back(quantile_1d(mu, 0.5));
    return grid;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double p = p_min + (1.0 - 2.0 * p_min) * static_cast<double>(i) / static_cast<double>(n - 1);
    grid.push_back(quantile_1d(mu, p));
  }
  return grid;
}

inline Map1D quantile_map_1d(const DensityModel& mu, const DensityModel& nu, const std::vector<double>& grid) {
  if (mu.dim() != 1 || nu.dim() != 1) throw DomainError("quantile_map_1d needs one-dimensional models");
  if (grid.empty()) throw DomainError("quantile_map_1d: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError("quantile_map_1d: grid must be strictly increasing");
  Map1D map;
  map.grid = grid;
  map.values.reserve(grid.size());
  map.source_cdf.reserve(grid.size());
  for (double x : grid) {
    const double p = cdf_1d(mu, x);
    if (!(p > 0.0 && p < 1.0))
      throw GridTruncation("cdf_mu saturates at x = " + std::to_string(x) +
                           "; shrink the grid to the mu-quantile range [1e-6, 1-1e-6]");
    map.source_cdf.push_back(p);
    map.values.push_back(quantile_1d(nu, p));
  }
  return map;
}

// sup over the grid of |cdf_nu(T(x)) - cdf_mu(x)|, computed on the tail
// holding each level to avoid cancellation.
inline double pushforward_error(const Map1D& map, const DensityModel& nu) {
  double worst = 0.0;
  for (std::size_t i = 0; i < map.grid.size(); ++i) {
    const double p = map.source_cdf[i];
    const double e = p <= 0.5 ? std::abs(cdf_1d(nu, map.values[i]) - p)
                              : std::abs(sf_1d(nu, map.values[i]) - (1.0 - p));
    worst = std::max(worst, e);
  }
  return worst;
}

}  // namespace otgrowth
