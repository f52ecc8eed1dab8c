#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "otgrowth/concentration.hpp"
#include "oracles.hpp"

using namespace otgrowth;

TEST(Profiles, SubgaussianValues) {
  const auto p = subgaussian_profile(1.0);
  EXPECT_DOUBLE_EQ(p(0.0), 1.0);
  EXPECT_NEAR(p(2.0), std::exp(-2.0), 1e-15);
  EXPECT_NEAR(p(2.0), 0.13534, 1e-5);
  EXPECT_EQ(p.r0(), 0.0);
  EXPECT_THROW(subgaussian_profile(0.0), DomainError);
  EXPECT_THROW(subgaussian_profile(-1.0), DomainError);
}

TEST(Profiles, ExponentialValuesAndClamp) {
  EXPECT_NEAR(exponential_profile(1.0, 1.0)(1.0), 0.36788, 1e-5);
  EXPECT_DOUBLE_EQ(exponential_profile(2.0, 1.0)(0.0), 1.0);
  EXPECT_THROW(exponential_profile(0.5, 1.0), DomainError);
  EXPECT_THROW(exponential_profile(1.0, 0.0), DomainError);
}

TEST(Profiles, DecreasingOnGrid) {
  EXPECT_TRUE(is_decreasing_on_grid(subgaussian_profile(2.0), 20.0));
  EXPECT_TRUE(is_decreasing_on_grid(exponential_profile(3.0, 2.0), 50.0));
  EXPECT_TRUE(is_decreasing_on_grid(polyconc_profile(2.0, 3.0, 1.0), 50.0));
  const ConcentrationProfile bumpy(CustomProfile{[](double r) { return 0.5 + 0.4 * std::sin(r); }}, 0.0);
  EXPECT_FALSE(is_decreasing_on_grid(bumpy, 10.0));
}

TEST(PolyTail, OneDimensionalConstantAgainstQuadrature) {
  const auto psi = polytail_psi(1.0, 2.0, 1);
  const auto& k = std::get<PolyTail>(psi.kind());
  EXPECT_NEAR(k.C_tail, 2.0, 1e-14);
  EXPECT_EQ(k.exponent, 1.0);
  for (double r : {0.5, 1.0, 3.0, 10.0}) {
    // brute force: M^{-d} |y|^{-pd} over |y| >= r, both half-lines
    const double brute = 2.0 * oracle::integrate_upper([](double y) { return 1.0 / (y * y); }, r);
    EXPECT_NEAR(psi(r), brute, 1e-8 * brute) << r;
    const double true_tail = 2.0 * oracle::integrate_upper([](double y) { return 1.0 / (1.0 + y * y); }, r);
    EXPECT_LE(true_tail, psi(r)) << r;
  }
}

TEST(PolyTail, HigherDimensionalConstantAgainstPolarQuadrature) {
  // surface areas of the unit sphere: 2 pi (d=2), 4 pi (d=3)
  const double surface[] = {0.0, 2.0, 2 * std::numbers::pi, 4 * std::numbers::pi};
  for (int d : {2, 3})
    for (double p : {1.5, 3.0}) {
      const double M = 0.7;
      const auto psi = polytail_psi(M, p, d);
      const double r = 2.0;
      const double brute = surface[d] * std::pow(M, -d) *
                           oracle::integrate_upper([&](double t) { return std::pow(t, d - 1 - p * d); }, r);
      EXPECT_NEAR(psi(r), brute, 1e-7 * brute) << d << " " << p;
    }
}

TEST(PolyTail, ExponentAndDecay) {
  const auto psi = polytail_psi(1.0, 3.0, 2);
  EXPECT_EQ(std::get<PolyTail>(psi.kind()).exponent, 4.0);
  EXPECT_LT(psi(1e6), 1e-20);
  EXPECT_THROW(polytail_psi(1.0, 1.0, 1), DomainError);
  EXPECT_THROW(polytail_psi(0.0, 2.0, 1), DomainError);
}

TEST(Inverse, ClosedForms) {
  EXPECT_NEAR(invert_profile(subgaussian_profile(1.0), std::exp(-2.0)), 2.0, 1e-12);
  const TailFunction inv_sq(PolyTail{1.0, 2.0}, 0.0);
  EXPECT_NEAR(invert_profile(inv_sq, 0.01), 10.0, 1e-12);
  EXPECT_EQ(invert_profile(exponential_profile(1.0, 1.0), 1.0), 0.0);
  EXPECT_THROW(invert_profile(subgaussian_profile(1.0), 0.0), DomainError);
  EXPECT_THROW(invert_profile(inv_sq, -1.0), DomainError);
}

TEST(Inverse, CustomUnboundedIsReported) {
  const ConcentrationProfile flat(CustomProfile{[](double) { return 0.5; }}, 0.0);
  EXPECT_THROW(invert_profile(flat, 0.1), UnboundedInverse);
}

TEST(Inverse, FromProfileShiftsByMoment) {
  const auto tail = TailFunction::from_profile(subgaussian_profile(1.0), 1.5);
  EXPECT_EQ(tail.r0(), 1.5);
  EXPECT_NEAR(invert_profile(tail, std::exp(-2.0)), 3.5, 1e-12);
}

TEST(Inverse, GeneralizedInverseConsistencyProperty) {
  std::vector<ConcentrationProfile> profiles = {
      subgaussian_profile(1.0), subgaussian_profile(0.3), exponential_profile(1.0, 1.0),
      exponential_profile(4.0, 0.5), polyconc_profile(2.0, 1.5, 0.5),
      ConcentrationProfile(CustomProfile{[](double r) { return 1.0 / (1.0 + r * r * r); }}, 0.25)};
  for (const auto& f : profiles) {
    const double hi = f(f.r0());
    const double lo = f(f.r0() + 10.0) * 1.01;
    for (int i = 1; i < 200; ++i) {
      const double s = lo + (hi - lo) * i / 200.0;
      if (!(s > lo && s < hi)) continue;
      const double r = invert_profile(f, s);
      EXPECT_LE(f(r), s) << f.kind_name() << " s=" << s;
      EXPECT_GT(f(r - 1e-6), s) << f.kind_name() << " s=" << s;
    }
  }
}

TEST(Lsi, Cases) {
  EXPECT_EQ(lsi_sigma(LsiCase::BakryEmery, 1.0).sigma2, 1.0);
  EXPECT_EQ(lsi_sigma(LsiCase::HolleyStroock, 1.0, 0.0).sigma2, 1.0);
  EXPECT_NEAR(lsi_sigma(LsiCase::HolleyStroock, 2.0, 0.5).sigma2, std::exp(1.0) / 2.0, 1e-15);
  EXPECT_NEAR(lsi_sigma(LsiCase::HolleyStroock, 2.0, 0.5).sigma2, 1.3591, 1e-4);
  EXPECT_FALSE(lsi_sigma(LsiCase::BakryEmery, 1.0).convention.empty());
  EXPECT_THROW(lsi_sigma(LsiCase::AidaShigekawa, 1.0, 0.1), UnsupportedConstant);
  EXPECT_THROW(lsi_sigma(LsiCase::BakryEmery, 0.0), DomainError);
}

TEST(Lsi, HolleyStroockEmpiricalTail) {
  // W = kappa x^2/2 + delta cos(3x): bounded perturbation of a kappa-convex potential
  const double kappa = 2.0, delta = 0.5;
  CustomFamily fam;
  fam.log_density = [&](std::span<const double> x) { return -(kappa * x[0] * x[0] / 2 + delta * std::cos(3 * x[0])); };
  fam.proposal_scale = 1.0 / std::sqrt(kappa);
  const auto model = DensityModel::custom(1, fam);
  const auto s = sample(model, 40000, 17);
  const double sigma2 = lsi_sigma(LsiCase::HolleyStroock, kappa, delta).sigma2;
  const auto prof = subgaussian_profile(sigma2);
  std::vector<double> rs;
  for (int i = 1; i <= 30; ++i) rs.push_back(0.1 * i);
  for (const TestFunction& f : {TestFunction{LinearTest{{1.0}}}, TestFunction{LinearTest{{-1.0}}}, TestFunction{NormTest{}}})
    for (const auto& row : empirical_tail(s.points, f, rs))
      EXPECT_LE(row.estimate, prof(row.r) + 3 * row.std_error) << row.r;
}

TEST(EmpiricalTail, PointMassHasNoTail) {
  PointSet pts;
  for (int i = 0; i < 50; ++i) pts.push_back(std::vector<double>{0.1, -0.7});
  for (const auto& row : empirical_tail(pts, NormTest{}, {1e-9, 0.5, 2.0})) EXPECT_EQ(row.estimate, 0.0);
}

TEST(EmpiricalTail, EmptyAndInvalidInputs) {
  EXPECT_THROW(empirical_tail(PointSet{}, NormTest{}, {1.0}), DomainError);
  PointSet pts;
  pts.push_back(std::vector<double>{1.0, 1.0});
  EXPECT_THROW(empirical_tail(pts, LinearTest{{1.0, 1.0}}, {1.0}), DomainError);
}

TEST(EmpiricalTail, GaussianMatchesNormalCdf) {
  const auto s = sample(DensityModel::standard_gaussian(1), 100000, 23);
  const auto rows = empirical_tail(s.points, LinearTest{{1.0}}, {1.0});
  EXPECT_LE(std::abs(rows[0].estimate - (1 - oracle::normal_cdf(1.0))), 3 * rows[0].std_error);
  std::vector<double> rs;
  for (int i = 0; i <= 40; ++i) rs.push_back(0.1 * i);
  for (const auto& row : empirical_tail(s.points, LinearTest{{1.0}}, rs))
    EXPECT_LE(row.estimate, std::exp(-row.r * row.r / 2) + 3 * row.std_error);
}

TEST(ProfileDomination, GaussianLaplaceSuites) {
  std::vector<double> rs;
  for (int i = 0; i <= 60; ++i) rs.push_back(0.1 * i);
  for (int d : {1, 2, 3}) {
    const Point e1 = [&] { Point v(d, 0.0); v[0] = 1.0; return v; }();
    const Point diag(d, 1.0 / std::sqrt(double(d)));
    const std::vector<TestFunction> fns = {LinearTest{e1}, LinearTest{diag}, NormTest{},
                                           ConeTest{Point(d, 0.5), e1}};
    const auto gs = sample(DensityModel::standard_gaussian(d), 50000, 100 + d);
    const auto sub = subgaussian_profile(1.0);
    const auto lap_model = DensityModel::laplace(d, 1.0);
    const auto ls = sample(lap_model, 50000, 200 + d);
    const auto expo = exponential_profile(*lap_model.params().c, *lap_model.params().sigma);
    for (const auto& f : fns) {
      for (const auto& row : empirical_tail(gs.points, f, rs))
        EXPECT_LE(row.estimate, sub(row.r) + 3 * row.std_error) << "gaussian d=" << d << " r=" << row.r;
      for (const auto& row : empirical_tail(ls.points, f, rs))
        EXPECT_LE(row.estimate, expo(row.r) + 3 * row.std_error) << "laplace d=" << d << " r=" << row.r;
    }
  }
}

TEST(ProfileDomination, PolyTailDominatesPolyVNormTail) {
  for (int d : {1, 2, 3})
    for (double q : {1.5, 2.0, 3.0}) {
      const auto m = DensityModel::polyv(d, 1.0, q);
      const auto psi = polytail_psi(*m.params().M, *m.params().p, d);
      const auto s = sample(m, 100000, 300 + d);
      for (const auto& row : empirical_norm_tail(s.points, {1.0, 2.0, 4.0, 8.0}))
        EXPECT_LE(row.estimate, psi(row.r) + 3 * row.std_error) << d << " " << q << " r=" << row.r;
    }
}

namespace {

DensityModel one_plus_x2(int d) {
  // density (1+|x|^2)^{-d} in the V^{-d} convention: W proportional to 1+|x|^2
  return DensityModel::polyv(d, 1.0, 2.0);
}

double drift_formula(int d, double k, std::span<const double> x) {
  const double r2 = dot(x, x), r = std::sqrt(r2);
  return d * (k - 1) * std::pow(r, k - 2) - d * std::pow(r, k - 2) * (2 * r2 / (1 + r2));
}

}  // namespace

TEST(LyapunovDrift, HandValues) {
  const auto w = one_plus_x2(1);
  const double zero[1] = {0.0}, one[1] = {1.0}, ten[1] = {10.0};
  EXPECT_EQ(lyapunov_drift(w, 3.0, zero), 0.0);
  EXPECT_NEAR(lyapunov_drift(w, 3.0, one), 1.0, 1e-14);
  EXPECT_NEAR(lyapunov_drift(w, 3.0, ten), 20.0 - 10.0 * 200.0 / 101.0, 1e-12);
  EXPECT_NEAR(lyapunov_drift(w, 3.0, ten), 0.198, 1e-3);
  EXPECT_THROW(lyapunov_drift(w, 2.0, one), DomainError);
}

TEST(LyapunovDrift, MatchesSymbolicFormula) {
  for (int d : {1, 2, 3}) {
    const auto w = one_plus_x2(d);
    for (double k : {2.5, 3.0, 4.0})
      for (const Point& x : radial_grid(d, 1e3, 80)) {
        const double got = lyapunov_drift(w, k, x);
        const double want = drift_formula(d, k, x);
        // relative to the size of the two cancelling terms of Lg
        const double scale = d * (k - 1) * std::pow(norm(x), k - 2);
        EXPECT_LE(std::abs(got - want), 1e-12 * scale) << d << " " << k;
      }
  }
}

TEST(DriftFit, FeasibleCaseMatchesGridMinimization) {
  const auto w = one_plus_x2(1);
  std::vector<Point> grid;
  for (int i = -4000; i <= 4000; ++i) grid.push_back({i * 0.05});
  const auto fit = fit_drift_constants(w, 2.5, 1.9, 2.0, grid);
  ASSERT_EQ(fit.status, DriftStatus::Feasible) << fit.message;
  EXPECT_GT(fit.C2, 0.0);
  // oracle: min over the exterior of -Lg / g^{(k-2)/k} using the symbolic drift
  double c2 = 1e300;
  double c1 = 0.0;
  for (const Point& x : grid) {
    const double r = std::abs(x[0]);
    const double gp = std::pow(1 + std::pow(r, 2.5) / 2.5, 0.2);
    if (r >= 2.0) c2 = std::min(c2, -drift_formula(1, 2.5, x) / gp);
  }
  for (const Point& x : grid) {
    const double r = std::abs(x[0]);
    const double gp = std::pow(1 + std::pow(r, 2.5) / 2.5, 0.2);
    if (r < 2.0) c1 = std::max(c1, drift_formula(1, 2.5, x) + c2 * gp);
  }
  EXPECT_NEAR(fit.C2, c2, 1e-12);
  EXPECT_NEAR(fit.C1, c1, 1e-12);
}

TEST(DriftFit, ProofConstantsSatisfyInequality) {
  const auto w = one_plus_x2(2);
  const auto grid = radial_grid(2, 500.0, 400);
  const double k = 2.5, beta_p = 1.55, R = 2.0;
  const auto fit = fit_drift_constants(w, k, beta_p, R, grid);
  ASSERT_TRUE(fit.exterior_ratio_ok);
  for (const Point& x : grid) {
    const double r = norm(x);
    const double g = 1 + std::pow(r, k) / k;
    const double rhs = (r < R ? fit.C1_proof : 0.0) - fit.C2_proof * std::pow(g, (k - 2) / k);
    EXPECT_LE(lyapunov_drift(w, k, x), rhs + 1e-12) << r;
  }
  EXPECT_GE(fit.C2, fit.C2_proof - 1e-12);
}

TEST(DriftFit, InfeasibleWhenExponentTooLarge) {
  const auto w = one_plus_x2(1);
  std::vector<Point> grid;
  for (int i = -200; i <= 200; ++i) grid.push_back({i * 0.5});
  EXPECT_EQ(fit_drift_constants(w, 4.0, 1.99, 2.0, grid).status, DriftStatus::Infeasible);
  // even when the caller overstates beta', the grid shows no C2 > 0 works
  EXPECT_EQ(fit_drift_constants(w, 4.0, 3.5, 2.0, grid).status, DriftStatus::Infeasible);
}

TEST(DriftFit, DegenerateWithoutExterior) {
  const auto w = one_plus_x2(1);
  std::vector<Point> grid;
  for (int i = -10; i <= 10; ++i) grid.push_back({i * 0.1});
  const auto fit = fit_drift_constants(w, 2.5, 1.9, 2.0, grid);
  EXPECT_EQ(fit.status, DriftStatus::Degenerate);
  EXPECT_THROW(fit_drift_constants(w, 2.5, 1.9, 1.0, grid), DomainError);
}
