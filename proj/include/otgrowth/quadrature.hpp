#pragma once

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "otgrowth/errors.hpp"

namespace otgrowth::quad {

// Relative tolerance handed to the integrators. Every density integral in
// the library is bounded by the total mass (~1), so this keeps the absolute
// error well under 1e-10.
inline constexpr double kRelTol = 1e-12;

template <class F>
double finite(F&& f, double a, double b, double rel_tol = kRelTol,
              unsigned max_depth = 18) {
  if (!(a < b)) return 0.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, max_depth, rel_tol, &err);
  if (!std::isfinite(v)) throw ConfigurationError("quadrature produced a non-finite value");
  return v;
}

// Integral over [a, +inf).
template <class F>
double upper_tail(F&& f, double a, double rel_tol = kRelTol) {
  static thread_local boost::math::quadrature::exp_sinh<double> integrator;
  double err = 0.0, l1 = 0.0;
  std::size_t levels = 0;
  double v;
  try {
    v = integrator.integrate(f, a, std::numeric_limits<double>::infinity(), rel_tol,
                             &err, &l1, &levels);
  } catch (const std::exception& e) {
    throw ConfigurationError(std::string("tail quadrature failed: ") + e.what());
  }
  if (!std::isfinite(v) || err > 1e-6 * std::max(1.0, std::abs(v)))
    throw ConfigurationError("tail quadrature did not converge (non-normalizable density?)");
  return v;
}

// Integral over (-inf, b].
template <class F>
double lower_tail(F&& f, double b, double rel_tol = kRelTol) {
  return upper_tail([&](double t) { return f(-t); }, -b, rel_tol);
}

}  // namespace otgrowth::quad
