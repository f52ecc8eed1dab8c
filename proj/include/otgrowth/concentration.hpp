#pragma once

// Concentration profiles (phi, r0), tail functions psi, their generalized
// inverses, empirical tail estimates over a catalog of 1-Lipschitz test
// functions, and the Lyapunov drift inequality used for polynomial
// concentration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "otgrowth/errors.hpp"
#include "otgrowth/geometry.hpp"
#include "otgrowth/measures.hpp"

namespace otgrowth {

// ---- profiles ----------------------------------------------------------------

struct Subgaussian {
  double sigma2;
};
struct Exponential {
  double c, sigma;
};
// phi(r) = C r^{-ell} for r >= r0
struct PolyConc {
  double C, ell;
};
struct CustomProfile {
  std::function<double(double)> phi;
  std::string label = "custom";
};

class ConcentrationProfile {
 public:
  using Kind = std::variant<Subgaussian, Exponential, PolyConc, CustomProfile>;

  ConcentrationProfile(Kind kind, double r0) : kind_(std::move(kind)), r0_(r0) {
    if (!(r0_ >= 0.0)) throw DomainError("profile r0 must be non-negative");
  }

  const Kind& kind() const noexcept { return kind_; }
  double r0() const noexcept { return r0_; }

  std::string kind_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Subgaussian>) return "subgaussian";
          else if constexpr (std::is_same_v<T, Exponential>) return "exponential";
          else if constexpr (std::is_same_v<T, PolyConc>) return "polyconc";
          else return k.label;
        },
        kind_);
  }

  // Clamped to [0, 1].
  double operator()(double r) const {
    const double v = std::visit(
        [r](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Subgaussian>) return std::exp(-r * r / (2.0 * k.sigma2));
          else if constexpr (std::is_same_v<T, Exponential>) return k.c * std::exp(-r / k.sigma);
          else if constexpr (std::is_same_v<T, PolyConc>) return r > 0.0 ? k.C * std::pow(r, -k.ell) : 1.0;
          else return k.phi(r);
        },
        kind_);
    return std::clamp(v, 0.0, 1.0);
  }

 private:
  Kind kind_;
  double r0_;
};

inline ConcentrationProfile subgaussian_profile(double sigma2) {
  if (!(sigma2 > 0.0)) throw DomainError("subgaussian profile needs sigma2 > 0");
  return {Subgaussian{sigma2}, 0.0};
}

inline ConcentrationProfile exponential_profile(double c, double sigma) {
  if (!(c >= 1.0)) throw DomainError("exponential profile needs c >= 1");
  if (!(sigma > 0.0)) throw DomainError("exponential profile needs sigma > 0");
  return {Exponential{c, sigma}, 0.0};
}

inline ConcentrationProfile polyconc_profile(double C, double ell, double r0) {
  if (!(C > 0.0) || !(ell > 0.0)) throw DomainError("polynomial profile needs C > 0 and ell > 0");
  return {PolyConc{C, ell}, r0};
}

// ---- tail functions ----------------------------------------------------------

struct PolyTail {
  double C_tail, exponent;
};
// psi(r) = phi(r - M): |z| is 1-Lipschitz and its mean is at most M.
struct FromProfile {
  ConcentrationProfile profile;
  double M;
};

class TailFunction {
 public:
  using Kind = std::variant<PolyTail, FromProfile>;

  TailFunction(Kind kind, double r0) : kind_(std::move(kind)), r0_(r0) {
    if (!(r0_ >= 0.0)) throw DomainError("tail r0 must be non-negative");
  }

  static TailFunction from_profile(ConcentrationProfile profile, double M) {
    if (!(M >= 0.0)) throw DomainError("moment bound M must be non-negative");
    const double r0 = M + profile.r0();
    return {FromProfile{std::move(profile), M}, r0};
  }

  const Kind& kind() const noexcept { return kind_; }
  double r0() const noexcept { return r0_; }

  double operator()(double r) const {
    return std::visit(
        [r](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, PolyTail>)
            return r > 0.0 ? k.C_tail * std::pow(r, -k.exponent) : std::numeric_limits<double>::infinity();
          else return k.profile(std::max(0.0, r - k.M));
        },
        kind_);
  }

 private:
  Kind kind_;
  double r0_;
};

// psi(r) = C_tail r^{-d(p-1)}, C_tail = M^{-d} omega_d / (p-1): integrating
// M^{-d} |y|^{-pd} over |y| >= r in polar coordinates.
inline TailFunction polytail_psi(double M, double p, int d) {
  if (!(M > 0.0)) throw DomainError("polytail needs M > 0");
  if (!(p > 1.0)) throw DomainError("polytail needs p > 1 (non-integrable tail otherwise)");
  if (d < 1) throw DomainError("polytail needs d >= 1");
  const double c_tail = std::exp(-d * std::log(M) + log_unit_ball_volume(d)) / (p - 1.0);
  return {PolyTail{c_tail, d * (p - 1.0)}, 0.0};
}

// ---- generalized inverse -----------------------------------------------------

namespace detail {

// Nudge a closed-form inverse upward until f(r) <= s holds in floating point.
template <class F>
double settle_inverse(const F& f, double r, double s) {
  for (int i = 0; i < 64 && f(r) > s; ++i)
    r = std::nextafter(r, std::numeric_limits<double>::infinity()) * (1.0 + 1e-15 * i);
  return r;
}

template <class F>
double bisect_inverse(const F& f, double r0, double s) {
  if (f(r0) <= s) return r0;
  double lo = r0, step = 1.0, hi = r0 + step;
  while (f(hi) > s) {
    lo = hi;
    step *= 2.0;
    hi = r0 + step;
    if (step > 1e15) throw UnboundedInverse("profile stays above the requested level on the search range");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) <= s) hi = mid; else lo = mid;
  }
  return hi;
}

}  // namespace detail

// Smallest r >= r0 with f(r) <= s.
inline double invert_profile(const ConcentrationProfile& f, double s) {
  if (!(s > 0.0)) throw DomainError("generalized inverse needs s > 0");
  const double r0 = f.r0();
  if (f(r0) <= s) return r0;
  const double r = std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Subgaussian>)
          return std::sqrt(k.sigma2) * std::sqrt(2.0 * std::log(1.0 / s));
        else if constexpr (std::is_same_v<T, Exponential>)
          return k.sigma * std::log(k.c / s);
        else if constexpr (std::is_same_v<T, PolyConc>)
          return std::pow(k.C / s, 1.0 / k.ell);
        else
          return detail::bisect_inverse(f, r0, s);
      },
      f.kind());
  return detail::settle_inverse(f, std::max(r0, r), s);
}

inline double invert_profile(const TailFunction& f, double s) {
  if (!(s > 0.0)) throw DomainError("generalized inverse needs s > 0");
  const double r0 = f.r0();
  if (f(r0) <= s) return r0;
  const double r = std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PolyTail>) return std::pow(k.C_tail / s, 1.0 / k.exponent);
        else return k.M + invert_profile(k.profile, s);
      },
      f.kind());
  return detail::settle_inverse(f, std::max(r0, r), s);
}

// Same inverse with the level given as log s, for levels below the double
// range. Closed-form kinds only; custom profiles go through exp(log_s).
inline double invert_profile_log(const ConcentrationProfile& f, double log_s) {
  if (std::isnan(log_s) || log_s == -std::numeric_limits<double>::infinity())
    throw DomainError("generalized inverse needs s > 0");
  if (log_s >= std::log(std::numeric_limits<double>::min())) return invert_profile(f, std::exp(log_s));
  const double r = std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Subgaussian>) return std::sqrt(k.sigma2) * std::sqrt(-2.0 * log_s);
        else if constexpr (std::is_same_v<T, Exponential>) return k.sigma * (std::log(k.c) - log_s);
        else if constexpr (std::is_same_v<T, PolyConc>) return std::exp((std::log(k.C) - log_s) / k.ell);
        else throw UnboundedInverse("custom profile cannot be inverted below the smallest normal double");
      },
      f.kind());
  return std::max(f.r0(), r);
}

// Checks phi is non-increasing on [r0, r_max] over n grid steps.
inline bool is_decreasing_on_grid(const ConcentrationProfile& f, double r_max, int n = 1000) {
  double prev = f(f.r0());
  for (int i = 1; i <= n; ++i) {
    const double r = f.r0() + (r_max - f.r0()) * i / n;
    const double v = f(r);
    if (v > prev) return false;
    prev = v;
  }
  return true;
}

// ---- log-Sobolev cases ---------------------------------------------------------

enum class LsiCase { BakryEmery, HolleyStroock, AidaShigekawa };

struct LsiSigma {
  double sigma2;
  std::string convention;
};

// Variance proxy for a density e^{-W} with Hess W >= kappa, optionally
// perturbed by a bounded (delta) term. Convention: sigma^2 = 1/kappa.
inline LsiSigma lsi_sigma(LsiCase which, double kappa, double delta = 0.0) {
  if (!(kappa > 0.0)) throw DomainError("lsi_sigma needs kappa > 0");
  if (!(delta >= 0.0)) throw DomainError("lsi_sigma needs delta >= 0");
  const std::string conv = "sigma2 = 1/kappa (curvature kappa read as variance proxy 1/kappa)";
  switch (which) {
    case LsiCase::BakryEmery: return {1.0 / kappa, conv};
    case LsiCase::HolleyStroock: return {std::exp(2.0 * delta) / kappa, conv + "; bounded perturbation multiplies by e^{2 delta}"};
    case LsiCase::AidaShigekawa:
      throw UnsupportedConstant("log-Lipschitz perturbation: sigma2(kappa, delta) exists but is not numerically specified");
  }
  throw DomainError("unknown LSI case");
}

// ---- 1-Lipschitz test functions --------------------------------------------------

struct LinearTest {
  Point theta;  // unit vector
};
struct NormTest {};
// z -> (2/3)<z - a, u> + |z - a|/3
struct ConeTest {
  Point a, u;
};

using TestFunction = std::variant<LinearTest, NormTest, ConeTest>;

inline void validate_test_function(const TestFunction& f) {
  auto unit = [](const Point& v) { return std::abs(norm(v) - 1.0) <= 1e-9; };
  if (const auto* l = std::get_if<LinearTest>(&f); l && !unit(l->theta))
    throw DomainError("linear test function needs |theta| = 1");
  if (const auto* c = std::get_if<ConeTest>(&f)) {
    if (!unit(c->u)) throw DomainError("cone test function needs |u| = 1");
    if (c->a.size() != c->u.size()) throw DomainError("cone test function: a and u differ in dimension");
  }
}

inline double evaluate(const TestFunction& f, std::span<const double> z) {
  return std::visit(
      [z](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, LinearTest>) return dot(k.theta, z);
        else if constexpr (std::is_same_v<T, NormTest>) return norm(z);
        else {
          double inner = 0.0, sq = 0.0;
          for (std::size_t i = 0; i < z.size(); ++i) {
            const double v = z[i] - k.a[i];
            inner += v * k.u[i];
            sq += v * v;
          }
          return (2.0 / 3.0) * inner + std::sqrt(sq) / 3.0;
        }
      },
      f);
}

struct TailRow {
  double r, estimate, std_error;
};

// Fraction of samples with f >= mean(f) + r, with binomial standard error.
inline std::vector<TailRow> empirical_tail(const PointSet& samples, const TestFunction& f,
                                           const std::vector<double>& r_grid) {
  if (samples.empty()) throw DomainError("empirical_tail: empty sample set");
  validate_test_function(f);
  const std::size_t n = samples.size();
  std::vector<double> vals(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    vals[i] = evaluate(f, samples.row(i));
    mean += vals[i];
  }
  mean /= static_cast<double>(n);
  std::sort(vals.begin(), vals.end());
  std::vector<TailRow> out;
  out.reserve(r_grid.size());
  for (double r : r_grid) {
    const auto it = std::lower_bound(vals.begin(), vals.end(), mean + r);
    const double p = static_cast<double>(vals.end() - it) / static_cast<double>(n);
    out.push_back({r, p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))});
  }
  return out;
}

// Fraction of samples with |z| >= r.
inline std::vector<TailRow> empirical_norm_tail(const PointSet& samples, const std::vector<double>& r_grid) {
  if (samples.empty()) throw DomainError("empirical_norm_tail: empty sample set");
  const std::size_t n = samples.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = norm(samples.row(i));
  std::sort(norms.begin(), norms.end());
  std::vector<TailRow> out;
  for (double r : r_grid) {
    const auto it = std::lower_bound(norms.begin(), norms.end(), r);
    const double p = static_cast<double>(norms.end() - it) / static_cast<double>(n);
    out.push_back({r, p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))});
  }
  return out;
}

// ---- Lyapunov drift ------------------------------------------------------------

// Generator L = Laplacian - d grad log W . grad applied to g = 1 + |x|^k / k:
// Lg(x) = d(k-1)|x|^{k-2} - d |x|^{k-2} x.grad W / W, with W the model's V.
inline double lyapunov_drift(const DensityModel& w_model, double k, std::span<const double> x) {
  if (!(k > 2.0)) throw DomainError("lyapunov_drift needs k > 2");
  const double d = w_model.dim();
  const double r = norm(x);
  if (r == 0.0) return 0.0;
  const double ratio = dot(x, w_model.grad_log_v(x));
  const double rk2 = std::pow(r, k - 2.0);
  return d * (k - 1.0) * rk2 - d * rk2 * ratio;
}

enum class DriftStatus { Feasible, Infeasible, Degenerate };

struct DriftFit {
  DriftStatus status = DriftStatus::Infeasible;
  double C1 = 0.0, C2 = 0.0;
  Point binding_interior, binding_exterior;
  double min_exterior_ratio = std::numeric_limits<double>::infinity();
  bool exterior_ratio_ok = false;  // x.grad W/W >= beta' on the exterior grid
  double alpha = 0.0;              // -inf over the interior grid of x.grad W / W
  double C1_proof = 0.0, C2_proof = 0.0;
  std::string message;
};

// Smallest C1 and largest C2 such that Lg <= C1 1_{B(0,R)} - C2 g^{(k-2)/k}
// holds on every grid point. Also reports the constants from the explicit
// chain d(2(k-1) + alpha + beta') R^{k-2} and d(beta' - (k-1)).
inline DriftFit fit_drift_constants(const DensityModel& w_model, double k, double beta_prime, double R,
                                    const std::vector<Point>& grid) {
  if (!(k > 2.0)) throw DomainError("fit_drift_constants needs k > 2");
  if (!(R >= 2.0)) throw DomainError("fit_drift_constants needs R >= 2");
  DriftFit fit;
  const double d = w_model.dim();
  if (beta_prime <= k - 1.0) {
    fit.status = DriftStatus::Infeasible;
    fit.message = "beta' <= k-1: the drift condition needs beta > k-1";
    return fit;
  }
  auto g = [k](double r) { return 1.0 + std::pow(r, k) / k; };
  auto gpow = [&](double r) { return std::pow(g(r), (k - 2.0) / k); };

  double c2 = std::numeric_limits<double>::infinity();
  double inf_interior_ratio = std::numeric_limits<double>::infinity();
  bool any_exterior = false;
  for (const Point& x : grid) {
    const double r = norm(x);
    const double ratio = r > 0.0 ? dot(x, w_model.grad_log_v(x)) : 0.0;
    if (r >= R) {
      any_exterior = true;
      fit.min_exterior_ratio = std::min(fit.min_exterior_ratio, ratio);
      const double bound = -lyapunov_drift(w_model, k, x) / gpow(r);
      if (bound < c2) {
        c2 = bound;
        fit.binding_exterior = x;
      }
    } else {
      inf_interior_ratio = std::min(inf_interior_ratio, ratio);
    }
  }
  fit.alpha = std::isfinite(inf_interior_ratio) ? -inf_interior_ratio : 0.0;
  fit.C1_proof = d * (2.0 * (k - 1.0) + fit.alpha + beta_prime) * std::pow(R, k - 2.0);
  fit.C2_proof = d * (beta_prime - (k - 1.0));
  fit.exterior_ratio_ok = any_exterior && fit.min_exterior_ratio >= beta_prime;

  if (!any_exterior) {
    fit.status = DriftStatus::Degenerate;
    fit.message = "grid has no point outside B(0,R); C2 is unconstrained";
    c2 = 0.0;
  } else if (!(c2 > 0.0)) {
    fit.status = DriftStatus::Infeasible;
    fit.C2 = c2;
    fit.message = "no C2 > 0 satisfies the drift inequality outside B(0,R)";
    return fit;
  } else {
    fit.status = DriftStatus::Feasible;
    fit.message = "ok";
  }
  fit.C2 = c2;
  double c1 = 0.0;
  for (const Point& x : grid) {
    const double r = norm(x);
    if (r >= R) continue;
    const double need = lyapunov_drift(w_model, k, x) + c2 * gpow(r);
    if (need > c1 || fit.binding_interior.empty()) {
      c1 = std::max(c1, need);
      fit.binding_interior = x;
    }
  }
  fit.C1 = c1;
  return fit;
}

}  // namespace otgrowth
