#pragma once

// Growth bounds |T(x)| <= B(|x|) for Brenier maps. Every concrete bound comes
// in two flavors: the closed formula as stated (Published) and the
// composition of the generic tail bound with the ball lower bounds
// (Assembled), which is always well defined.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "otgrowth/ballprob.hpp"
#include "otgrowth/concentration.hpp"
#include "otgrowth/errors.hpp"
#include "otgrowth/geometry.hpp"

namespace otgrowth {

enum class Theorem { Generic, Concentration, SubgaussianTarget, ExponentialTarget, LogConcaveTarget, PolynomialDensities };
enum class Flavor { Published, Assembled };

inline const char* to_string(Theorem t) {
  switch (t) {
    case Theorem::Generic: return "generic";
    case Theorem::Concentration: return "concentration";
    case Theorem::SubgaussianTarget: return "subgaussian";
    case Theorem::ExponentialTarget: return "exponential";
    case Theorem::LogConcaveTarget: return "logconcave";
    case Theorem::PolynomialDensities: return "polynomial";
  }
  return "?";
}

inline const char* to_string(Flavor f) { return f == Flavor::Published ? "published" : "assembled"; }

namespace detail {

inline double clamp_mu(double mu_ball) {
  if (!(mu_ball > 0.0)) throw DomainError("ball probability must be positive");
  return std::min(mu_ball, 1.0);
}

}  // namespace detail

// max(3 r0, 3 psi^{-1}(mu_ball))
inline double generic_bound(const TailFunction& psi, double mu_ball) {
  const double s = detail::clamp_mu(mu_ball);
  return std::max(3.0 * psi.r0(), 3.0 * invert_profile(psi, s));
}

// max(M + 3 r0, M + 3 phi^{-1}(mu_ball)) for a centered target.
inline double concentration_bound(const ConcentrationProfile& phi, double M, double mu_ball) {
  if (!(M >= 0.0)) throw DomainError("moment bound M must be non-negative");
  const double s = detail::clamp_mu(mu_ball);
  return std::max(M + 3.0 * phi.r0(), M + 3.0 * invert_profile(phi, s));
}

// As concentration_bound, with the ball mass given by its logarithm.
inline double concentration_bound_log(const ConcentrationProfile& phi, double M, double log_mu_ball) {
  if (!(M >= 0.0)) throw DomainError("moment bound M must be non-negative");
  return std::max(M + 3.0 * phi.r0(), M + 3.0 * invert_profile_log(phi, std::min(0.0, log_mu_ball)));
}

// Log of the lower bound on mu(B(x + u, 1/2)) for the loggrad class: the
// centre has norm at most |x| + 1.
inline double log_loggrad_ball_mass(double A, double V0, int d, double x_norm) {
  return log_ball_lower_loggrad(A, d, x_norm + 1.0, log_muB0_lower(A, V0, d, MuB0Variant::Published));
}

namespace detail {

inline void check_loggrad(double A, double V0, int d, double x_norm) {
  if (!(A >= 0.0)) throw DomainError("A must be non-negative");
  if (!(V0 > 0.0)) throw DomainError("V(0) must be positive");
  if (d < 1) throw DomainError("dimension must be at least 1");
  if (!(x_norm >= 0.0)) throw DomainError("|x| must be non-negative");
}

}  // namespace detail

inline double subgaussian_radicand(double A, double V0, int d, double x_norm) {
  return 2.0 * A * std::numbers::ln2 + 5.0 * A - log_unit_ball_volume(d) / d + std::log(V0) +
         2.0 * A * std::log1p(x_norm);
}

inline double subgaussian_growth(double A, double V0, double sigma2, int d, double x_norm, Flavor flavor) {
  detail::check_loggrad(A, V0, d, x_norm);
  if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
  const double sigma = std::sqrt(sigma2);
  const double M = std::sqrt(static_cast<double>(d)) * sigma;
  if (flavor == Flavor::Published) {
    const double rad = subgaussian_radicand(A, V0, d, x_norm);
    if (rad < 0.0)
      throw FormulaDegenerate("published subgaussian radicand is negative (" + std::to_string(rad) +
                              "); use the assembled flavor");
    return M * (3.0 + 3.0 * std::sqrt(rad));
  }
  return concentration_bound_log(subgaussian_profile(sigma2), M, log_loggrad_ball_mass(A, V0, d, x_norm));
}

// sqrt(d) sigma (1 + 3 sqrt(2A log 2 + 3A - d^{-1} log mu(B(0,1/2)) + 2A log(1+|x|)))
inline double subgaussian_growth_intermediate(double A, double V0, double sigma2, int d, double x_norm,
                                              std::optional<double> muB0 = std::nullopt) {
  detail::check_loggrad(A, V0, d, x_norm);
  if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
  const double log_m0 = muB0 ? std::log(detail::clamp_mu(*muB0)) : log_muB0_lower(A, V0, d, MuB0Variant::Published);
  const double rad = 2.0 * A * std::numbers::ln2 + 3.0 * A - log_m0 / d + 2.0 * A * std::log1p(x_norm);
  if (rad < 0.0) throw FormulaDegenerate("intermediate subgaussian radicand is negative");
  return std::sqrt(d * sigma2) * (1.0 + 3.0 * std::sqrt(rad));
}

// Parenthesized term of the published exponential formula; negative values
// are clamped to zero by exponential_growth.
inline double exponential_published_term(double A, double V0, double c, int d, double x_norm) {
  return std::log(c) / d + std::log(V0) + 2.0 * A * std::numbers::ln2 + 3.0 * A + 2.0 - log_unit_ball_volume(d) / d +
         2.0 * A * std::log1p(x_norm);
}

inline double exponential_growth(double A, double V0, double c, double sigma, int d, double x_norm, Flavor flavor) {
  detail::check_loggrad(A, V0, d, x_norm);
  if (!(c >= 1.0)) throw DomainError("exponential concentration needs c >= 1");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  const double M = 2.0 * std::sqrt(c * d) * sigma;
  if (flavor == Flavor::Published)
    return M + 3.0 * sigma * d * std::max(0.0, exponential_published_term(A, V0, c, d, x_norm));
  return concentration_bound_log(exponential_profile(c, sigma), M, log_loggrad_ball_mass(A, V0, d, x_norm));
}

inline double logconcave_sigma(double c2, int d) {
  if (d < 2) throw DomainError("log-concave bound needs d >= 2 (log d must be positive)");
  if (!(c2 > 0.0)) throw DomainError("c2 must be positive");
  return c2 * std::sqrt(std::log(static_cast<double>(d)));
}

inline double logconcave_growth(double A, double V0, double c1, double c2, int d, double x_norm,
                                Flavor flavor = Flavor::Assembled) {
  return exponential_growth(A, V0, c1, logconcave_sigma(c2, d), d, x_norm, flavor);
}

enum class AlphaSource { Assembled, UserSupplied };

struct PolynomialConstants {
  double K0;        // |x| < 1 plateau
  double K1;        // multiplier of (1+|x|)^exponent
  double exponent;  // (q-1)/(p-1)
  double alpha;
  double C_tail;
  double small_ball_mass;
};

// K0 = 3 psi^{-1}(L^{-d}(1+4^q)^{-d} omega_d): for |x| < 1 and lambda = 1 the
// ball B(x + 2u, 1) sits in B(0,4).
inline PolynomialConstants polynomial_constants(double L, double q, double M_tail, double p, int d,
                                                AlphaSource alpha_source = AlphaSource::Assembled,
                                                std::optional<double> alpha = std::nullopt) {
  if (!(q > 1.0)) throw DomainError("polynomial bound needs q > 1");
  if (!(p > 1.0)) throw DomainError("polynomial bound needs p > 1");
  if (!(L > 0.0) || !(M_tail > 0.0)) throw DomainError("polynomial bound needs L > 0 and M > 0");
  PolynomialConstants k{};
  const TailFunction psi = polytail_psi(M_tail, p, d);
  k.C_tail = std::get<PolyTail>(psi.kind()).C_tail;
  k.exponent = (q - 1.0) / (p - 1.0);
  if (alpha_source == AlphaSource::UserSupplied) {
    if (!alpha || !(*alpha > 0.0)) throw ConfigurationError("user-supplied alpha must be given and positive");
    k.alpha = *alpha;
  } else {
    k.alpha = poly_alpha(L, q, d);
  }
  k.small_ball_mass = std::min(1.0, std::exp(-d * std::log(L) - d * std::log1p(std::pow(4.0, q)) + log_unit_ball_volume(d)));
  k.K0 = generic_bound(psi, k.small_ball_mass);
  k.K1 = 3.0 * std::pow(k.C_tail / k.alpha, 1.0 / (d * (p - 1.0)));
  return k;
}

inline double polynomial_growth(const PolynomialConstants& k, double x_norm) {
  if (!(x_norm >= 0.0)) throw DomainError("|x| must be non-negative");
  if (x_norm < 1.0) return k.K0;
  return std::max(k.K0, k.K1 * std::pow(1.0 + x_norm, k.exponent));
}

inline double polynomial_growth(double L, double q, double M_tail, double p, int d, double x_norm,
                                AlphaSource alpha_source = AlphaSource::Assembled,
                                std::optional<double> alpha = std::nullopt) {
  return polynomial_growth(polynomial_constants(L, q, M_tail, p, d, alpha_source, alpha), x_norm);
}

struct BoundParams {
  int d = 1;
  std::optional<double> A, V0, sigma2, c, sigma, c1, c2, L, q, M_tail, p, M_moment, r0, alpha;
  std::string lambda_policy;
  bool proof_intermediate = false;
};

struct ConstantNote {
  std::string name;
  double value;
  std::string note;
};

// Immutable bound curve |x| -> B(|x|) with its parameters and constants.
class GrowthBound {
 public:
  double evaluate(double x_norm) const { return fn_(x_norm); }
  double operator()(double x_norm) const { return fn_(x_norm); }
  Theorem theorem() const noexcept { return theorem_; }
  Flavor flavor() const noexcept { return flavor_; }
  const BoundParams& params() const noexcept { return params_; }
  const std::vector<ConstantNote>& constants() const noexcept { return constants_; }
  const std::vector<std::string>& notes() const noexcept { return notes_; }

  static GrowthBound generic(TailFunction psi, std::function<double(double)> mu_ball, std::string lambda_policy) {
    GrowthBound b(Theorem::Generic, Flavor::Assembled);
    b.params_.r0 = psi.r0();
    b.params_.lambda_policy = std::move(lambda_policy);
    b.fn_ = [psi = std::move(psi), mu = std::move(mu_ball)](double x) { return generic_bound(psi, mu(x)); };
    return b;
  }

  static GrowthBound concentration(ConcentrationProfile phi, double M, std::function<double(double)> mu_ball,
                                   std::string lambda_policy) {
    GrowthBound b(Theorem::Concentration, Flavor::Assembled);
    b.params_.M_moment = M;
    b.params_.r0 = phi.r0();
    b.params_.lambda_policy = std::move(lambda_policy);
    b.fn_ = [phi = std::move(phi), M, mu = std::move(mu_ball)](double x) { return concentration_bound(phi, M, mu(x)); };
    return b;
  }

  static GrowthBound subgaussian(double A, double V0, double sigma2, int d, Flavor flavor,
                                 bool proof_intermediate = false) {
    GrowthBound b(Theorem::SubgaussianTarget, flavor);
    detail::check_loggrad(A, V0, d, 0.0);
    if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
    b.params_.d = d;
    b.params_.A = A;
    b.params_.V0 = V0;
    b.params_.sigma2 = sigma2;
    b.params_.M_moment = std::sqrt(d * sigma2);
    b.params_.lambda_policy = "lambda = 1/2";
    b.params_.proof_intermediate = proof_intermediate;
    b.add_loggrad_constants(A, V0, d);
    if (proof_intermediate) {
      b.notes_.push_back("proof-intermediate formula sqrt(d) sigma (1 + 3 sqrt(... 3A ...)) (debug)");
      b.fn_ = [=](double x) { return subgaussian_growth_intermediate(A, V0, sigma2, d, x); };
    } else {
      if (flavor == Flavor::Published && subgaussian_radicand(A, V0, d, 0.0) < 0.0)
        b.notes_.push_back("published radicand negative at |x| = 0");
      b.fn_ = [=](double x) { return subgaussian_growth(A, V0, sigma2, d, x, flavor); };
    }
    return b;
  }

  static GrowthBound exponential(double A, double V0, double c, double sigma, int d, Flavor flavor) {
    GrowthBound b(Theorem::ExponentialTarget, flavor);
    b.init_exponential(A, V0, c, sigma, d);
    return b;
  }

  static GrowthBound logconcave(double A, double V0, double c1, double c2, int d, Flavor flavor) {
    GrowthBound b(Theorem::LogConcaveTarget, flavor);
    const double sigma = logconcave_sigma(c2, d);
    b.init_exponential(A, V0, c1, sigma, d);
    b.params_.c1 = c1;
    b.params_.c2 = c2;
    b.notes_.push_back("c1, c2 are user-assumed universal constants");
    return b;
  }

  static GrowthBound polynomial(double L, double q, double M_tail, double p, int d, Flavor flavor,
                                AlphaSource alpha_source = AlphaSource::Assembled,
                                std::optional<double> alpha = std::nullopt) {
    GrowthBound b(Theorem::PolynomialDensities, flavor);
    const auto k = polynomial_constants(L, q, M_tail, p, d, alpha_source, alpha);
    b.params_.d = d;
    b.params_.L = L;
    b.params_.q = q;
    b.params_.M_tail = M_tail;
    b.params_.p = p;
    b.params_.alpha = k.alpha;
    b.params_.r0 = 0.0;
    b.params_.lambda_policy = "lambda = 2|x| for |x| >= 1, lambda = 1 below";
    b.constants_ = {
        {"C", k.K1, "3 (C_tail/alpha)^{1/(d(p-1))}"},
        {"exponent", k.exponent, "(q-1)/(p-1)"},
        {"K0", k.K0, "3 psi^{-1}(L^{-d}(1+4^q)^{-d} omega_d), |x| < 1"},
        {"alpha", k.alpha, alpha_source == AlphaSource::Assembled ? "L^{-d} 7^{-qd} 2^{-(q-1)d} omega_d" : "user-supplied"},
        {"C_tail", k.C_tail, "M^{-d} omega_d / (p-1)"},
    };
    if (flavor == Flavor::Published) b.notes_.push_back("no explicit published constant; C taken from the assembled proof");
    b.fn_ = [k](double x) { return polynomial_growth(k, x); };
    return b;
  }

 private:
  GrowthBound(Theorem t, Flavor f) : theorem_(t), flavor_(f) {}

  void add_loggrad_constants(double A, double V0, int d) {
    constants_.push_back({"muB0", muB0_lower(A, V0, d, MuB0Variant::Published),
                          "exp(-d log V0 - d(A + 1/2 + log 2)) omega_d, clamped to 1"});
    constants_.push_back({"M", *params_.M_moment, theorem_ == Theorem::SubgaussianTarget ? "sqrt(d) sigma" : "2 sqrt(c d) sigma"});
  }

  void init_exponential(double A, double V0, double c, double sigma, int d) {
    detail::check_loggrad(A, V0, d, 0.0);
    if (!(c >= 1.0)) throw DomainError("exponential concentration needs c >= 1");
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    params_.d = d;
    params_.A = A;
    params_.V0 = V0;
    params_.c = c;
    params_.sigma = sigma;
    params_.M_moment = 2.0 * std::sqrt(c * d) * sigma;
    params_.lambda_policy = "lambda = 1/2";
    add_loggrad_constants(A, V0, d);
    if (flavor_ == Flavor::Published && exponential_published_term(A, V0, c, d, 0.0) < 0.0)
      notes_.push_back("published parenthesized term negative near |x| = 0; clamped at 0");
    const Flavor fl = flavor_;
    fn_ = [=](double x) { return exponential_growth(A, V0, c, sigma, d, x, fl); };
  }

  Theorem theorem_;
  Flavor flavor_;
  BoundParams params_;
  std::vector<ConstantNote> constants_;
  std::vector<std::string> notes_;
  std::function<double(double)> fn_;
};

}  // namespace otgrowth
