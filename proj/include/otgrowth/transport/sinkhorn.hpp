#pragma once

// Entropic OT. Log-domain potentials with scaling-form inner iterations;
// full log-sum-exp updates whenever a scaling leaves [1e-50, 1e50].

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "otgrowth/errors.hpp"
#include "otgrowth/transport/coupling.hpp"

namespace otgrowth {

struct SinkhornOptions {
  std::size_t max_iter = 20000;
  double tol = 1e-9;            // L1 marginal residual
  std::size_t check_every = 10;
  double rung_tol = 1e-4;  // intermediate ladder rungs only warm-start the next one
};

namespace detail {

inline double log_sum_exp(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : z) s += std::exp(x - mx);
  return mx + std::log(s);
}

inline void check_finite(const std::vector<double>& p, double eps) {
  for (double x : p)
    if (!std::isfinite(x))
      throw EpsilonTooSmall("sinkhorn: potentials became non-finite at epsilon = " + std::to_string(eps));
}

}  // namespace detail

// f, g are warm-start potentials (resized to zero if empty) and are updated
// in place.
inline Coupling sinkhorn(const WeightedPoints& X, const WeightedPoints& Y, double eps, const SinkhornOptions& opt,
                         std::vector<double>& f, std::vector<double>& g) {
  if (!(eps > 0.0)) throw DomainError("sinkhorn needs epsilon > 0");
  validate_marginal(X, "source");
  validate_marginal(Y, "target");
  const std::size_t n = X.points.size(), m = Y.points.size();
  const auto C = squared_distance_matrix(X.points, Y.points);
  double cmax = 0.0;
  for (const auto& row : C)
    for (double x : row) cmax = std::max(cmax, x);
  if (!std::isfinite(cmax / eps)) throw EpsilonTooSmall("sinkhorn: cost/epsilon overflows; increase epsilon");

  std::vector<double> loga(n), logb(m);
  for (std::size_t i = 0; i < n; ++i) loga[i] = std::log(X.weights[i]);
  for (std::size_t j = 0; j < m; ++j) logb[j] = std::log(Y.weights[j]);
  if (f.size() != n) f.assign(n, 0.0);
  if (g.size() != m) g.assign(m, 0.0);

  std::vector<double> K(n * m);  // -C / eps, row-major
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) K[i * m + j] = -C[i][j] / eps;
  const double inv = 1.0 / eps;

  std::vector<double> zr(m), zc(n);
  auto lse_update = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      if (X.weights[i] == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) zr[j] = g[j] * inv + K[i * m + j];
      f[i] = eps * (loga[i] - detail::log_sum_exp(zr));
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (Y.weights[j] == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) zc[i] = f[i] * inv + K[i * m + j];
      g[j] = eps * (logb[j] - detail::log_sum_exp(zc));
    }
    detail::check_finite(f, eps);
    detail::check_finite(g, eps);
  };

  // Scaling iterations on the stabilized kernel exp((f_i + g_j - C_ij)/eps),
  // absorbing the scalings into f, g whenever they drift far from 1.
  std::vector<double> Kt(n * m), a(n, 1.0), b(m, 1.0), a_new(n), b_new(m);
  auto rebuild = [&] {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) Kt[i * m + j] = std::exp((f[i] + g[j]) * inv + K[i * m + j]);
    std::fill(a.begin(), a.end(), 1.0);
    std::fill(b.begin(), b.end(), 1.0);
  };
  auto absorb = [&] {
    for (std::size_t i = 0; i < n; ++i)
      if (X.weights[i] > 0.0) f[i] += eps * std::log(a[i]);
    for (std::size_t j = 0; j < m; ++j)
      if (Y.weights[j] > 0.0) g[j] += eps * std::log(b[j]);
  };
  constexpr double kBig = 1e50;
  auto sane = [&](const std::vector<double>& s, const std::vector<double>& w) {
    for (std::size_t k = 0; k < s.size(); ++k)
      if (w[k] > 0.0 && !(s[k] > 1.0 / kBig && s[k] < kBig)) return false;
    return true;
  };
  auto row_residual = [&] {
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < m; ++j) r += Kt[i * m + j] * b[j];
      res += std::abs(a[i] * r - X.weights[i]);
    }
    return res;
  };

  Coupling out;
  out.solver = CouplingSolver::Sinkhorn;
  out.epsilon = eps;
  out.marginal_residual = std::numeric_limits<double>::infinity();
  lse_update();
  rebuild();
  std::size_t it = 1;
  while (it < opt.max_iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < m; ++j) r += Kt[i * m + j] * b[j];
      a_new[i] = X.weights[i] > 0.0 ? X.weights[i] / r : 0.0;
    }
    bool ok = sane(a_new, X.weights);
    if (ok) {
      std::fill(b_new.begin(), b_new.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) b_new[j] += Kt[i * m + j] * a_new[i];
      for (std::size_t j = 0; j < m; ++j) b_new[j] = Y.weights[j] > 0.0 ? Y.weights[j] / b_new[j] : 0.0;
      ok = sane(b_new, Y.weights);
    }
    if (!ok) {
      absorb();
      lse_update();
      rebuild();
    } else {
      a.swap(a_new);
      b.swap(b_new);
    }
    ++it;
    if (it % opt.check_every == 0 || it == opt.max_iter) {
      // columns are exact after the b update; the row side carries the error
      out.marginal_residual = row_residual();
      if (!std::isfinite(out.marginal_residual))
        throw EpsilonTooSmall("sinkhorn: marginals became non-finite at epsilon = " + std::to_string(eps));
      if (out.marginal_residual <= opt.tol) break;
    }
  }
  absorb();
  detail::check_finite(f, eps);
  detail::check_finite(g, eps);
  out.iterations = it;
  out.n_src = n;
  out.n_tgt = m;
  out.u = f;
  out.v = g;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double p = std::exp((f[i] + g[j] - C[i][j]) / eps);
      if (p > 0.0) {
        out.entries.push_back({i, j, p});
        out.cost += p * C[i][j];
      }
    }
  return out;
}

inline Coupling sinkhorn(const WeightedPoints& X, const WeightedPoints& Y, double eps, const SinkhornOptions& opt = {}) {
  std::vector<double> f, g;
  return sinkhorn(X, Y, eps, opt, f, g);
}

// Geometric epsilon ladder from eps_start down to eps_end with warm-started
// potentials; returns the coupling at eps_end.
inline Coupling sinkhorn_ladder(const WeightedPoints& X, const WeightedPoints& Y, double eps_start, double eps_end,
                                std::size_t steps = 8, const SinkhornOptions& opt = {}) {
  if (!(eps_start >= eps_end && eps_end > 0.0)) throw DomainError("sinkhorn_ladder needs eps_start >= eps_end > 0");
  if (steps < 1) steps = 1;
  std::vector<double> f, g;
  Coupling last;
  std::size_t total = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = steps == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(steps - 1);
    const double eps = eps_start * std::pow(eps_end / eps_start, t);
    const bool final = k + 1 == steps;
    SinkhornOptions o = opt;
    if (!final) o.tol = std::max(opt.tol, opt.rung_tol);
    last = sinkhorn(X, Y, final ? eps_end : eps, o, f, g);
    total += last.iterations;
  }
  last.iterations = total;
  return last;
}

}  // namespace otgrowth
