#pragma once

// Density families on R^d written in the V^{-d} convention (density = V^{-d}),
// samplers, one-dimensional distribution functions and moment estimators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "otgrowth/errors.hpp"
#include "otgrowth/geometry.hpp"
#include "otgrowth/quadrature.hpp"
#include "otgrowth/random.hpp"

namespace otgrowth {

struct GaussianFamily {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// density proportional to (kappa (1 + |x|^2)^{q/2})^{-d}
struct PolyVFamily {
  double kappa = 1.0;
  double q = 2.0;
};

struct UniformFamily {
  Point lo, hi;
};

// product of iid Laplace(0, scale) coordinates
struct LaplaceFamily {
  double scale = 1.0;
};

struct CustomFamily {
  std::function<double(std::span<const double>)> log_density;
  // optional; centred finite differences are used when empty
  std::function<Point(std::span<const double>)> grad_log_density;
  // random-walk proposal scale; 0 means undeclared
  double proposal_scale = 0.0;
  Point initial_state;
};

using Family =
    std::variant<GaussianFamily, PolyVFamily, UniformFamily, LaplaceFamily, CustomFamily>;

// Declared structural constants. All of them refer to V (not the density):
// |grad log V| <= A (1+|x|)^{-1}, V <= L (1+|x|^q), V >= M (1+|x|^p).
struct StructuralParams {
  std::optional<double> A, L, q, M, p, V0;
  std::optional<double> sigma2;        // subgaussian variance proxy
  std::optional<double> c, sigma;      // exponential concentration
};

struct McmcRecord {
  double step = 0.0;
  std::size_t burn_in = 0;
  std::size_t thinning = 0;
  double acceptance_rate = 0.0;
};

struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::optional<McmcRecord> mcmc;
};

struct Samples {
  PointSet points;
  std::optional<McmcRecord> mcmc;
};

struct McmcOptions {
  std::size_t burn_in = 10000;
  std::size_t thinning = 10;
};

class DensityModel {
 public:
  static DensityModel gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
    const auto d = mean.size();
    if (d < 1 || cov.rows() != d || cov.cols() != d)
      throw ConfigurationError("gaussian: mean/covariance shape mismatch");
    DensityModel m(static_cast<int>(d), GaussianFamily{std::move(mean), std::move(cov)});
    m.init_gaussian();
    return m;
  }

  static DensityModel standard_gaussian(int d, double sigma = 1.0) {
    if (d < 1) throw ConfigurationError("dimension must be positive");
    return gaussian(Eigen::VectorXd::Zero(d),
                    Eigen::MatrixXd::Identity(d, d) * (sigma * sigma));
  }

  static DensityModel polyv(int d, double kappa, double q) {
    if (d < 1) throw ConfigurationError("dimension must be positive");
    if (!(kappa > 0.0)) throw ConfigurationError("polyv: kappa must be positive");
    if (!(q > 1.0))
      throw ConfigurationError("polyv: q must exceed 1 for (1+|x|^2)^{-qd/2} to be integrable");
    DensityModel m(d, PolyVFamily{kappa, q});
    // integral of (1+|x|^2)^{-qd/2} = pi^{d/2} Gamma((q-1)d/2) / Gamma(qd/2)
    m.log_norm_ = 0.5 * d * std::log(std::numbers::pi) + std::lgamma(0.5 * (q - 1.0) * d) -
                  std::lgamma(0.5 * q * d);
    const double vscale = std::exp(m.log_norm_ / d);
    m.params_.A = 2.0 * q;
    m.params_.q = q;
    m.params_.p = q;
    m.params_.L = vscale * std::max(1.0, std::pow(2.0, 0.5 * q - 1.0));
    m.params_.M = vscale * std::min(1.0, std::pow(2.0, 0.5 * q - 1.0));
    m.params_.V0 = vscale;
    m.finish_1d();
    return m;
  }

  static DensityModel uniform(Point lo, Point hi) {
    if (lo.empty() || lo.size() != hi.size())
      throw ConfigurationError("uniform: box bounds shape mismatch");
    double log_vol = 0.0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!(hi[i] > lo[i])) throw ConfigurationError("uniform: empty box");
      log_vol += std::log(hi[i] - lo[i]);
    }
    const int d = static_cast<int>(lo.size());
    DensityModel m(d, UniformFamily{std::move(lo), std::move(hi)});
    m.log_norm_ = log_vol;
    m.finish_1d();
    return m;
  }

  static DensityModel laplace(int d, double scale) {
    if (d < 1) throw ConfigurationError("dimension must be positive");
    if (!(scale > 0.0)) throw ConfigurationError("laplace: scale must be positive");
    DensityModel m(d, LaplaceFamily{scale});
    m.log_norm_ = d * std::log(2.0 * scale);
    m.params_.c = 3.0;
    m.params_.sigma = 2.0 * scale;
    m.finish_1d();
    return m;
  }

  static DensityModel custom(int d, CustomFamily fam) {
    if (d < 1) throw ConfigurationError("dimension must be positive");
    if (!fam.log_density) throw ConfigurationError("custom: log density required");
    if (!fam.initial_state.empty() && fam.initial_state.size() != static_cast<std::size_t>(d))
      throw ConfigurationError("custom: initial state dimension mismatch");
    DensityModel m(d, std::move(fam));
    m.finish_1d();
    return m;
  }

  int dim() const noexcept { return dim_; }
  const Family& family() const noexcept { return family_; }
  const StructuralParams& params() const noexcept { return params_; }
  StructuralParams& params() noexcept { return params_; }

  bool is_smooth() const noexcept {
    return !std::holds_alternative<UniformFamily>(family_) &&
           !std::holds_alternative<LaplaceFamily>(family_);
  }

  std::string family_name() const {
    return std::visit(
        [](const auto& f) -> std::string {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, GaussianFamily>) return "gaussian";
          else if constexpr (std::is_same_v<T, PolyVFamily>) return "polyv";
          else if constexpr (std::is_same_v<T, UniformFamily>) return "uniform";
          else if constexpr (std::is_same_v<T, LaplaceFamily>) return "laplace";
          else return "custom";
        },
        family_);
  }

  // log of the (normalized when the family knows its constant) density.
  double log_density(std::span<const double> x) const {
    check_dim(x);
    return std::visit([&](const auto& f) { return log_density_impl(f, x); }, family_);
  }

  double density(std::span<const double> x) const { return std::exp(log_density(x)); }

  Point grad_log_density(std::span<const double> x) const {
    check_dim(x);
    return std::visit([&](const auto& f) { return grad_impl(f, x); }, family_);
  }

  // log V = -(log density)/d
  double log_v(std::span<const double> x) const { return -log_density(x) / dim_; }

  Point grad_log_v(std::span<const double> x) const {
    Point g = grad_log_density(x);
    for (double& v : g) v /= -static_cast<double>(dim_);
    return g;
  }

  double v_at_origin() const {
    const Point zero(static_cast<std::size_t>(dim_), 0.0);
    return std::exp(log_v(zero));
  }

  bool normalized() const noexcept {
    return !std::holds_alternative<CustomFamily>(family_) || mass_1d_.has_value();
  }

  // Centred finite-difference gradient with h = cbrt(eps) max(1, |x|).
  Point finite_difference_grad(std::span<const double> x) const {
    check_dim(x);
    const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, norm(x));
    Point g(static_cast<std::size_t>(dim_));
    Point y(x.begin(), x.end());
    for (int i = 0; i < dim_; ++i) {
      const double xi = y[i];
      y[i] = xi + h;
      const double fp = log_density(y);
      y[i] = xi - h;
      const double fm = log_density(y);
      y[i] = xi;
      g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
  }

  // ---- one-dimensional helpers -------------------------------------------

  double support_lo() const {
    if (const auto* u = std::get_if<UniformFamily>(&family_)) return u->lo[0];
    return -std::numeric_limits<double>::infinity();
  }
  double support_hi() const {
    if (const auto* u = std::get_if<UniformFamily>(&family_)) return u->hi[0];
    return std::numeric_limits<double>::infinity();
  }
  // split point for lower/upper tail integration
  double center_1d() const {
    return std::visit(
        [](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, GaussianFamily>) return f.mean[0];
          else if constexpr (std::is_same_v<T, UniformFamily>) return 0.5 * (f.lo[0] + f.hi[0]);
          else if constexpr (std::is_same_v<T, CustomFamily>)
            return f.initial_state.empty() ? 0.0 : f.initial_state[0];
          else return 0.0;
        },
        family_);
  }

  double density_1d(double x) const { return std::exp(log_density(std::span<const double>(&x, 1))); }

  // unnormalized mass of (lo, x]
  double lower_mass(double x) const {
    const double lo = support_lo();
    if (x <= lo) return 0.0;
    const double hi = support_hi();
    x = std::min(x, hi);
    auto f = [this](double t) { return density_1d(t); };
    if (std::isfinite(lo)) return quad::finite(f, lo, x);
    return quad::lower_tail(f, x);
  }
  // unnormalized mass of [x, hi)
  double upper_mass(double x) const {
    const double hi = support_hi();
    if (x >= hi) return 0.0;
    const double lo = support_lo();
    x = std::max(x, lo);
    auto f = [this](double t) { return density_1d(t); };
    if (std::isfinite(hi)) return quad::finite(f, x, hi);
    return quad::upper_tail(f, x);
  }

  double mass_1d() const {
    require_1d();
    if (!mass_1d_) throw ConfigurationError("density is not normalizable");
    return *mass_1d_;
  }

  // ---- sampling internals ------------------------------------------------

  const Eigen::MatrixXd& gaussian_factor() const { return gauss_factor_; }

 private:
  DensityModel(int d, Family f) : dim_(d), family_(std::move(f)) {}

  void check_dim(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(dim_))
      throw DomainError("point dimension does not match model dimension");
  }
  void require_1d() const {
    if (dim_ != 1) throw DomainError("operation requires a one-dimensional model");
  }

  void init_gaussian() {
    auto& g = std::get<GaussianFamily>(family_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.cov);
    if (es.info() != Eigen::Success) throw ConfigurationError("gaussian: covariance decomposition failed");
    const Eigen::VectorXd ev = es.eigenvalues();
    const double tol = 1e-14 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -tol) throw ConfigurationError("gaussian: covariance is not positive semidefinite");
    const Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
    gauss_factor_ = es.eigenvectors() * root.asDiagonal();
    params_.sigma2 = std::max(0.0, ev.maxCoeff());
    if (ev.minCoeff() > tol) {
      precision_ = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
      log_norm_ = 0.5 * dim_ * std::log(2.0 * std::numbers::pi) + 0.5 * ev.array().log().sum();
      gauss_regular_ = true;
      finish_1d();
    }
  }

  // Total 1D mass by quadrature. A non-normalizable custom density stays
  // constructible; cdf/quantile then report a configuration error.
  void finish_1d() {
    if (dim_ != 1) return;
    try {
      const double c = center_1d();
      const double z = lower_mass(c) + upper_mass(c);
      if (!(std::isfinite(z) && z > 0.0)) return;
      if (std::holds_alternative<CustomFamily>(family_)) {
        // normalize custom densities once their mass is known
        log_norm_ = std::log(z);
        mass_1d_ = 1.0;
      } else {
        mass_1d_ = z;
      }
    } catch (const ConfigurationError&) {
      mass_1d_.reset();
    }
  }

  double log_density_impl(const GaussianFamily& g, std::span<const double> x) const {
    if (!gauss_regular_) throw ConfigurationError("degenerate gaussian has no density");
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim_);
    const Eigen::VectorXd r = xv - g.mean;
    return -0.5 * r.dot(precision_ * r) - log_norm_;
  }
  double log_density_impl(const PolyVFamily& f, std::span<const double> x) const {
    return -0.5 * f.q * dim_ * std::log1p(dot(x, x)) - log_norm_;
  }
  double log_density_impl(const UniformFamily& u, std::span<const double> x) const {
    for (int i = 0; i < dim_; ++i)
      if (x[i] < u.lo[i] || x[i] > u.hi[i]) return -std::numeric_limits<double>::infinity();
    return -log_norm_;
  }
  double log_density_impl(const LaplaceFamily& l, std::span<const double> x) const {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return -s / l.scale - log_norm_;
  }
  double log_density_impl(const CustomFamily& c, std::span<const double> x) const {
    return c.log_density(x) - log_norm_;
  }

  Point grad_impl(const GaussianFamily& g, std::span<const double> x) const {
    if (!gauss_regular_) throw ConfigurationError("degenerate gaussian has no density");
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim_);
    const Eigen::VectorXd gr = -(precision_ * (xv - g.mean));
    return {gr.data(), gr.data() + dim_};
  }
  Point grad_impl(const PolyVFamily& f, std::span<const double> x) const {
    const double s = -f.q * dim_ / (1.0 + dot(x, x));
    Point g(x.begin(), x.end());
    for (double& v : g) v *= s;
    return g;
  }
  Point grad_impl(const UniformFamily& u, std::span<const double> x) const {
    for (int i = 0; i < dim_; ++i)
      if (!(x[i] > u.lo[i] && x[i] < u.hi[i]))
        return Point(static_cast<std::size_t>(dim_), std::numeric_limits<double>::quiet_NaN());
    return Point(static_cast<std::size_t>(dim_), 0.0);
  }
  Point grad_impl(const LaplaceFamily& l, std::span<const double> x) const {
    Point g(static_cast<std::size_t>(dim_));
    for (int i = 0; i < dim_; ++i) g[i] = x[i] > 0 ? -1.0 / l.scale : (x[i] < 0 ? 1.0 / l.scale : 0.0);
    return g;
  }
  Point grad_impl(const CustomFamily& c, std::span<const double> x) const {
    if (c.grad_log_density) return c.grad_log_density(x);
    return finite_difference_grad(x);
  }

  int dim_;
  Family family_;
  StructuralParams params_;
  double log_norm_ = 0.0;
  Eigen::MatrixXd gauss_factor_;
  Eigen::MatrixXd precision_;
  bool gauss_regular_ = false;
  std::optional<double> mass_1d_;
};

// ---- sampling ----------------------------------------------------------------

namespace detail {

inline void fill_chunk(const DensityModel& model, Engine& eng, PointSet& out,
                       std::size_t begin, std::size_t end) {
  const int d = model.dim();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::visit(
      [&](const auto& fam) {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, GaussianFamily>) {
          const auto& S = model.gaussian_factor();
          Eigen::VectorXd z(d);
          for (std::size_t i = begin; i < end; ++i) {
            for (int k = 0; k < d; ++k) z[k] = normal(eng);
            const Eigen::VectorXd x = fam.mean + S * z;
            std::copy(x.data(), x.data() + d, out.row(i).begin());
          }
        } else if constexpr (std::is_same_v<T, PolyVFamily>) {
          // (1+|x|^2)^{-qd/2} is the law of Z / sqrt(chi2_{d(q-1)})
          std::chi_squared_distribution<double> chi2(d * (fam.q - 1.0));
          for (std::size_t i = begin; i < end; ++i) {
            auto r = out.row(i);
            for (int k = 0; k < d; ++k) r[k] = normal(eng);
            const double s = std::sqrt(chi2(eng));
            for (int k = 0; k < d; ++k) r[k] /= s;
          }
        } else if constexpr (std::is_same_v<T, UniformFamily>) {
          for (std::size_t i = begin; i < end; ++i) {
            auto r = out.row(i);
            for (int k = 0; k < d; ++k) r[k] = fam.lo[k] + (fam.hi[k] - fam.lo[k]) * unif(eng);
          }
        } else if constexpr (std::is_same_v<T, LaplaceFamily>) {
          std::exponential_distribution<double> ex(1.0);
          for (std::size_t i = begin; i < end; ++i) {
            auto r = out.row(i);
            for (int k = 0; k < d; ++k) r[k] = (unif(eng) < 0.5 ? -1.0 : 1.0) * fam.scale * ex(eng);
          }
        }
      },
      model.family());
}

inline Samples sample_mcmc(const DensityModel& model, const CustomFamily& fam,
                           std::size_t n, std::uint64_t seed, const McmcOptions& opt) {
  if (!(fam.proposal_scale > 0.0))
    throw ConfigurationError("custom model sampling needs a declared proposal scale");
  const int d = model.dim();
  const double step = 2.4 * fam.proposal_scale / std::sqrt(static_cast<double>(d));
  Engine eng = make_engine(seed, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Point x = fam.initial_state.empty() ? Point(static_cast<std::size_t>(d), 0.0) : fam.initial_state;
  double lx = model.log_density(x);
  if (!std::isfinite(lx)) throw ConfigurationError("custom model: initial state has zero density");
  Point y(x.size());
  std::size_t accepted = 0, proposed = 0;
  const std::size_t thin = std::max<std::size_t>(1, opt.thinning);
  const std::size_t total = opt.burn_in + n * thin;
  Samples out{PointSet(n, d), McmcRecord{step, opt.burn_in, thin, 0.0}};
  for (std::size_t it = 0; it < total; ++it) {
    for (int k = 0; k < d; ++k) y[k] = x[k] + step * normal(eng);
    const double ly = model.log_density(y);
    ++proposed;
    if (std::isfinite(ly) && std::log(unif(eng)) < ly - lx) {
      x.swap(y);
      lx = ly;
      ++accepted;
    }
    if (it >= opt.burn_in && (it - opt.burn_in) % thin == thin - 1) {
      const std::size_t i = (it - opt.burn_in) / thin;
      std::copy(x.begin(), x.end(), out.points.row(i).begin());
    }
  }
  out.mcmc->acceptance_rate = static_cast<double>(accepted) / static_cast<double>(proposed);
  return out;
}

}  // namespace detail

// i.i.d. draws for the direct families, random-walk Metropolis for Custom.
// Deterministic given (seed, n).
inline Samples sample(const DensityModel& model, std::size_t n, std::uint64_t seed,
                      const McmcOptions& mcmc = {}) {
  if (n < 1) throw DomainError("sample: n must be at least 1");
  if (const auto* c = std::get_if<CustomFamily>(&model.family()))
    return detail::sample_mcmc(model, *c, n, seed, mcmc);
  Samples out{PointSet(n, model.dim()), std::nullopt};
  for (std::size_t begin = 0, chunk = 0; begin < n; begin += kSampleChunk, ++chunk) {
    Engine eng = make_engine(seed, chunk);
    detail::fill_chunk(model, eng, out.points, begin, std::min(n, begin + kSampleChunk));
  }
  return out;
}

// ---- one-dimensional distribution functions ----------------------------------

inline double cdf_1d(const DensityModel& model, double x) {
  if (model.dim() != 1) throw DomainError("cdf_1d requires a one-dimensional model");
  if (std::isnan(x)) throw DomainError("cdf_1d: NaN argument");
  if (x <= model.support_lo()) return 0.0;
  if (x >= model.support_hi()) return 1.0;
  const double z = model.mass_1d();
  if (x <= model.center_1d()) return std::clamp(model.lower_mass(x) / z, 0.0, 1.0);
  return std::clamp(1.0 - model.upper_mass(x) / z, 0.0, 1.0);
}

// survival function 1 - cdf, computed without cancellation in the upper tail
inline double sf_1d(const DensityModel& model, double x) {
  if (model.dim() != 1) throw DomainError("sf_1d requires a one-dimensional model");
  if (x <= model.support_lo()) return 1.0;
  if (x >= model.support_hi()) return 0.0;
  const double z = model.mass_1d();
  if (x > model.center_1d()) return std::clamp(model.upper_mass(x) / z, 0.0, 1.0);
  return std::clamp(1.0 - model.lower_mass(x) / z, 0.0, 1.0);
}

// Bisection + Newton on the cdf. Works on whichever tail holds p so that
// levels like 1 - 1e-6 are solved without cancellation.
inline double quantile_1d(const DensityModel& model, double p) {
  if (model.dim() != 1) throw DomainError("quantile_1d requires a one-dimensional model");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile_1d: p must lie in (0,1)");
  const double z = model.mass_1d();
  const double c = model.center_1d();
  const double pc = model.lower_mass(c) / z;
  const bool lower = p <= pc;
  // residual is increasing in x
  auto residual = [&](double x) {
    return lower ? model.lower_mass(x) / z - p : (1.0 - p) - model.upper_mass(x) / z;
  };

  double lo = model.support_lo(), hi = model.support_hi();
  if (lower) {
    hi = c;
    if (!std::isfinite(lo)) {
      double step = 1.0;
      lo = c - step;
      while (residual(lo) > 0.0) {
        hi = lo;
        step *= 2.0;
        lo = c - step;
        if (step > 1e300) throw ConfigurationError("quantile_1d: bracket search diverged");
      }
    }
  } else {
    lo = c;
    if (!std::isfinite(hi)) {
      double step = 1.0;
      hi = c + step;
      while (residual(hi) < 0.0) {
        lo = hi;
        step *= 2.0;
        hi = c + step;
        if (step > 1e300) throw ConfigurationError("quantile_1d: bracket search diverged");
      }
    }
  }

  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double r = residual(x);
    if (r == 0.0) return x;
    if (r < 0.0) lo = x; else hi = x;
    const double tol = 1e-11 * std::max(1.0, std::abs(x));
    if (hi - lo <= tol) break;
    const double dens = model.density_1d(x) / z;
    double next = dens > 0.0 ? x - r / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= tol) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

// ---- moments and structural checks ---------------------------------------------

inline MCEstimate mean_abs_moment(const DensityModel& model, std::size_t n, std::uint64_t seed) {
  const Samples s = sample(model, n, seed);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const double r = norm(s.points.row(i));
    sum += r;
    sum2 += r * r;
  }
  const double nn = static_cast<double>(n);
  const double mean = sum / nn;
  const double var = n > 1 ? std::max(0.0, (sum2 - nn * mean * mean) / (nn - 1.0)) : 0.0;
  return {mean, std::sqrt(var / nn), n, seed, s.mcmc};
}

struct LogGradReport {
  double worst_ratio = 0.0;
  Point worst_point;
  bool pass = false;
  bool domain_violation = false;
  std::string message;
};

// Worst |grad log V(x)| (1+|x|) over the grid against the declared A.
inline LogGradReport verify_log_grad_decay(const DensityModel& model, double A,
                                           const std::vector<Point>& grid) {
  LogGradReport rep;
  if (!model.is_smooth() && std::holds_alternative<UniformFamily>(model.family())) {
    rep.domain_violation = true;
    rep.message = "density is discontinuous at the support boundary; grad log V undefined";
    return rep;
  }
  for (const Point& x : grid) {
    const double ld = model.log_density(x);
    if (!std::isfinite(ld)) {
      rep.domain_violation = true;
      rep.worst_point = x;
      rep.message = "zero density at a grid point; grad log V undefined";
      return rep;
    }
    const Point g = model.grad_log_v(x);
    const double ratio = norm(g) * (1.0 + norm(x));
    if (!std::isfinite(ratio)) {
      rep.domain_violation = true;
      rep.worst_point = x;
      rep.message = "non-finite gradient on the grid";
      return rep;
    }
    if (ratio > rep.worst_ratio || rep.worst_point.empty()) {
      rep.worst_ratio = std::max(rep.worst_ratio, ratio);
      rep.worst_point = x;
    }
  }
  rep.pass = rep.worst_ratio <= A;
  rep.message = rep.pass ? "ok" : "declared A is exceeded on the grid";
  return rep;
}

// Points on rays (coordinate axes, their negatives, and the diagonal) at
// radii 0, spaced linearly to 10 then logarithmically to r_max.
inline std::vector<Point> radial_grid(int d, double r_max, std::size_t per_ray = 200) {
  std::vector<Point> dirs;
  for (int k = 0; k < d; ++k) {
    Point e(static_cast<std::size_t>(d), 0.0);
    e[k] = 1.0;
    dirs.push_back(e);
    e[k] = -1.0;
    dirs.push_back(e);
  }
  if (d > 1) dirs.emplace_back(static_cast<std::size_t>(d), 1.0 / std::sqrt(static_cast<double>(d)));
  std::vector<double> radii;
  const double r_lin = std::min(10.0, r_max);
  const std::size_t half = per_ray / 2;
  for (std::size_t i = 0; i <= half; ++i) radii.push_back(r_lin * static_cast<double>(i) / static_cast<double>(half));
  if (r_max > r_lin) {
    for (std::size_t i = 1; i <= per_ray - half; ++i)
      radii.push_back(r_lin * std::pow(r_max / r_lin, static_cast<double>(i) / static_cast<double>(per_ray - half)));
  }
  std::vector<Point> grid;
  grid.emplace_back(static_cast<std::size_t>(d), 0.0);
  for (const Point& u : dirs)
    for (double r : radii) {
      if (r == 0.0) continue;
      Point x = u;
      for (double& v : x) v *= r;
      grid.push_back(std::move(x));
    }
  return grid;
}

}  // namespace otgrowth
