#pragma once

// Lower bounds on source-measure ball probabilities, plus Monte Carlo and
// quadrature estimators used to check them.

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "otgrowth/errors.hpp"
#include "otgrowth/geometry.hpp"
#include "otgrowth/measures.hpp"

namespace otgrowth {

struct BallSpec {
  Point center;
  double radius;

  BallSpec(Point c, double r) : center(std::move(c)), radius(r) {
    if (!(radius > 0.0)) throw DomainError("ball radius must be positive");
  }
};

// alpha = L^{-d} 7^{-qd} 2^{-(q-1)d} omega_d. Valid for |x| >= 1 where the
// rescaled ball B(x/|x| + 4u, 2) sits in the annulus 1 <= |y| <= 7.
inline double poly_alpha(double L, double q, int d) {
  if (!(q > 1.0) || !(L > 0.0)) throw DomainError("poly_alpha needs q > 1 and L > 0");
  return std::exp(-d * std::log(L) - q * d * std::log(7.0) - (q - 1.0) * d * std::log(2.0) +
                  log_unit_ball_volume(d));
}

// Lower bound on mu(B(x + 4|x|u, 2|x|)) for densities V^{-d} with
// V <= L(1 + |z|^q). For |x| < 1 the ball lies in B(0,7) and the bound is
// inf_{B(0,7)} density times its volume.
inline double ball_lower_poly(double L, double q, int d, std::span<const double> x,
                              std::span<const double> u, double density_inf_b07) {
  if (!(q > 1.0) || !(L > 0.0)) throw DomainError("ball_lower_poly needs q > 1 and L > 0");
  if (static_cast<int>(x.size()) != d || static_cast<int>(u.size()) != d)
    throw DomainError("ball_lower_poly: dimension mismatch");
  if (std::abs(norm(u) - 1.0) > 1e-9) throw DomainError("ball_lower_poly: u must be a unit vector");
  const double r = norm(x);
  if (r >= 1.0) return poly_alpha(L, q, d) * std::pow(1.0 + r, -(q - 1.0) * d);
  if (!(density_inf_b07 >= 0.0)) throw DomainError("ball_lower_poly: density infimum must be non-negative");
  return density_inf_b07 * unit_ball_volume(d) * std::pow(2.0 * r, d);
}

// Log of the lower bound on mu(B(x, 1/2)) for |grad log V| <= A (1+|x|)^{-1}.
inline double log_ball_lower_loggrad(double A, int d, double x_norm, double log_muB0) {
  if (!(A >= 0.0)) throw DomainError("ball_lower_loggrad needs A >= 0");
  if (!(log_muB0 <= 0.0) || std::isinf(log_muB0)) throw DomainError("ball_lower_loggrad needs muB0 in (0,1]");
  if (!(x_norm >= 0.0)) throw DomainError("ball_lower_loggrad needs |x| >= 0");
  return -1.5 * A * d - 2.0 * A * d * std::log1p(2.0 * x_norm) + log_muB0;
}

inline double ball_lower_loggrad(double A, int d, double x_norm, double muB0) {
  if (!(muB0 > 0.0 && muB0 <= 1.0)) throw DomainError("ball_lower_loggrad needs muB0 in (0,1]");
  return std::exp(log_ball_lower_loggrad(A, d, x_norm, std::log(muB0)));
}

enum class MuB0Variant {
  Published,  // exp(-d log V0 - d(A + 1/2 + log 2)) omega_d
  Sharp,      // exp(-d log V0 - d(A/2 + log 2)) omega_d
};

// Lower bound on mu(B(0,1/2)) from log V being A-Lipschitz near the origin.
// Clamped to 1.
inline double log_muB0_lower(double A, double V0, int d, MuB0Variant variant = MuB0Variant::Published) {
  if (!(V0 > 0.0)) throw DomainError("muB0_lower needs V(0) > 0");
  if (!(A >= 0.0)) throw DomainError("muB0_lower needs A >= 0");
  const double per_dim = variant == MuB0Variant::Published ? A + 0.5 + std::numbers::ln2 : 0.5 * A + std::numbers::ln2;
  return std::min(0.0, -d * std::log(V0) - d * per_dim + log_unit_ball_volume(d));
}

inline double muB0_lower(double A, double V0, int d, MuB0Variant variant = MuB0Variant::Published) {
  return std::exp(log_muB0_lower(A, V0, d, variant));
}

// Fraction of n samples inside the ball, with binomial standard error.
inline MCEstimate ball_prob_mc(const DensityModel& model, const BallSpec& ball, std::size_t n, std::uint64_t seed) {
  if (ball.center.size() != static_cast<std::size_t>(model.dim()))
    throw DomainError("ball_prob_mc: ball dimension mismatch");
  const Samples s = sample(model, n, seed);
  const double r2 = ball.radius * ball.radius;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < s.points.size(); ++i) hits += squared_distance(s.points.row(i), ball.center) <= r2;
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n, seed, s.mcmc};
}

// Deterministic ball probability for d <= 3: cdf difference in 1D, nested
// adaptive Gauss-Kronrod in polar / spherical coordinates otherwise.
inline double ball_prob_quadrature(const DensityModel& model, const BallSpec& ball) {
  const int d = model.dim();
  if (ball.center.size() != static_cast<std::size_t>(d)) throw DomainError("ball_prob_quadrature: dimension mismatch");
  if (d > 3) throw DomainError("ball_prob_quadrature supports d <= 3");
  if (!model.normalized()) throw ConfigurationError("ball_prob_quadrature needs a normalized density");
  const Point& c = ball.center;
  const double rho = ball.radius;
  if (d == 1) {
    const double hi = c[0] + rho, lo = c[0] - rho;
    // difference of whichever tail is smaller keeps precision far out
    if (lo > model.center_1d()) return std::max(0.0, sf_1d(model, lo) - sf_1d(model, hi));
    return std::max(0.0, cdf_1d(model, hi) - cdf_1d(model, lo));
  }
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double pi = std::numbers::pi;
  if (d == 2) {
    auto radial = [&](double r) {
      auto ang = [&](double t) {
        const double p[2] = {c[0] + r * std::cos(t), c[1] + r * std::sin(t)};
        return model.density(p);
      };
      return r * GK::integrate(ang, 0.0, 2 * pi, 10, 1e-10);
    };
    return GK::integrate(radial, 0.0, rho, 10, 1e-10);
  }
  auto radial = [&](double r) {
    auto polar = [&](double ph) {
      const double sp = std::sin(ph), cp = std::cos(ph);
      auto az = [&](double t) {
        const double p[3] = {c[0] + r * sp * std::cos(t), c[1] + r * sp * std::sin(t), c[2] + r * cp};
        return model.density(p);
      };
      return sp * GK::integrate(az, 0.0, 2 * pi, 6, 1e-9);
    };
    return r * r * GK::integrate(polar, 0.0, pi, 6, 1e-9);
  };
  return GK::integrate(radial, 0.0, rho, 6, 1e-9);
}

}  // namespace otgrowth
