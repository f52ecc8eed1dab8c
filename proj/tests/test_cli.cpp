#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "otgrowth/cli.hpp"
#include "oracles.hpp"

using namespace otgrowth;
namespace fs = std::filesystem;
using cli::json;

namespace {

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::runtime_error("no column " + name);
  }
  double num(std::size_t r, const std::string& name) const { return std::stod(rows[r][col(name)]); }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

Csv read_csv(const fs::path& p) {
  std::ifstream in(p);
  EXPECT_TRUE(in.good()) << p;
  Csv c;
  std::string line;
  std::getline(in, line);
  c.header = split(line);
  while (std::getline(in, line)) c.rows.push_back(split(line));
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json scenario(const std::string& name) { return cli::load_scenario(fs::path(OTGROWTH_SCENARIO_DIR) / (name + ".json")); }

fs::path fresh_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("otgrowth_cli_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

cli::Report run(const std::string& sub, const json& s, const fs::path& dir,
                cli::FlavorSel flavor = cli::FlavorSel::Both) {
  cli::Options opt;
  opt.out_dir = dir;
  opt.flavor = flavor;
  return cli::run_guarded(sub, s, opt, "test");
}

}  // namespace

TEST(CliConfig, UnknownKeysAndSchemaAreConfigErrors) {
  const auto dir = fresh_dir("config");
  json s = scenario("cauchy_to_gaussian_1d");
  s["sigmaa"] = 1.0;
  EXPECT_EQ(run("verify-1d", s, dir).exit_code, cli::kConfigError);

  s = scenario("cauchy_to_gaussian_1d");
  s["target"]["sigam"] = 2.0;
  const auto r = run("verify-1d", s, dir);
  EXPECT_EQ(r.exit_code, cli::kConfigError);
  EXPECT_NE(r.summary["error"].get<std::string>().find("sigam"), std::string::npos);

  s = scenario("cauchy_to_gaussian_1d");
  s["schema"] = 2;
  EXPECT_EQ(run("verify-1d", s, dir).exit_code, cli::kConfigError);
  s.erase("schema");
  EXPECT_EQ(run("verify-1d", s, dir).exit_code, cli::kConfigError);

  s = scenario("cauchy_to_gaussian_1d");
  s["theorem"]["kind"] = "subgausian";
  EXPECT_EQ(run("verify-1d", s, dir).exit_code, cli::kConfigError);
  EXPECT_EQ(run("no-such-command", scenario("cauchy_to_gaussian_1d"), dir).exit_code, cli::kConfigError);
}

TEST(CliConfig, MissingTheoremConstantIsReported) {
  const auto dir = fresh_dir("missing");
  json s = scenario("cauchy_to_gaussian_1d");
  s["target"] = {{"family", "uniform"}, {"lo", {-1.0}}, {"hi", {1.0}}};
  const auto r = run("verify-1d", s, dir);
  EXPECT_EQ(r.exit_code, cli::kConfigError);
  EXPECT_NE(r.summary["error"].get<std::string>().find("sigma2"), std::string::npos);
}

TEST(CliConfig, FormattingUsesSeventeenDigits) {
  EXPECT_EQ(cli::fmt(0.1), "0.10000000000000001");
  EXPECT_EQ(cli::fmt(2.0), "2");
  EXPECT_EQ(cli::fmt(std::nan("")), "nan");
  EXPECT_EQ(std::stod(cli::fmt(1.0 / 3.0)), 1.0 / 3.0);
}

// Cauchy -> N(0,1): |T(x)| = |Phi^{-1}(F_C(x))| checked against an
// independent inverse-cdf oracle, and bounded pointwise.
TEST(CliVerify1d, CauchyToGaussianHasNoViolations) {
  const auto dir = fresh_dir("v1d");
  const auto r = run("verify-1d", scenario("cauchy_to_gaussian_1d"), dir);
  ASSERT_EQ(r.exit_code, cli::kOk) << r.summary.dump(2);
  EXPECT_EQ(r.summary["violations"], 0);
  EXPECT_LT(r.summary["max_ratio"].get<double>(), 1.0);
  const Csv c = read_csv(dir / "cauchy_to_gaussian_1d_map1d.csv");
  EXPECT_EQ(c.header, (std::vector<std::string>{"x", "abs_T", "bound_published", "bound_assembled", "pass"}));
  ASSERT_EQ(c.rows.size(), 2001u);
  for (std::size_t i = 0; i < c.rows.size(); i += 50) {
    const double x = c.num(i, "x");
    EXPECT_NEAR(c.num(i, "abs_T"), std::abs(oracle::normal_quantile(oracle::cauchy_cdf(x))), 1e-6) << x;
    EXPECT_LE(c.num(i, "abs_T"), c.num(i, "bound_assembled"));
    EXPECT_LE(c.num(i, "abs_T"), c.num(i, "bound_published"));
    EXPECT_EQ(c.rows[i][c.col("pass")], "1");
  }
  EXPECT_TRUE(fs::exists(dir / "cauchy_to_gaussian_1d_summary.json"));
}

TEST(CliVerify1d, GaussianSourceFailsTheGate) {
  const auto dir = fresh_dir("gate");
  const auto r = run("verify-1d", scenario("gaussian_source_gate_failure"), dir);
  EXPECT_EQ(r.exit_code, cli::kGateFailure);
  EXPECT_EQ(r.summary["status"], "gate-failed");
  bool saw = false;
  for (const auto& c : r.summary["gate"])
    if (c["check"] == "log-grad-decay") {
      saw = true;
      EXPECT_FALSE(c["pass"].get<bool>());
    }
  EXPECT_TRUE(saw);
  // no bound rows for a failed gate
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_NE(e.path().extension(), ".csv") << e.path();
}

TEST(CliVerify1d, OverstatedProfileFailsTheGate) {
  const auto dir = fresh_dir("gate2");
  json s = scenario("cauchy_to_gaussian_1d");
  s["target"]["sigma"] = 2.0;
  s["target"]["concentration"] = {{"kind", "subgaussian"}, {"sigma2", 0.25}};
  const auto r = run("verify-1d", s, dir);
  EXPECT_EQ(r.exit_code, cli::kGateFailure);
}

TEST(CliVerify1d, SinglePointGrid) {
  const auto dir = fresh_dir("one");
  json s = scenario("cauchy_to_gaussian_1d");
  s["grid"] = {{"x", {0.3}}};
  const auto r = run("verify-1d", s, dir);
  ASSERT_EQ(r.exit_code, cli::kOk) << r.summary.dump(2);
  const Csv c = read_csv(dir / "cauchy_to_gaussian_1d_map1d.csv");
  ASSERT_EQ(c.rows.size(), 1u);
  EXPECT_NEAR(c.num(0, "abs_T"), oracle::normal_quantile(oracle::cauchy_cdf(0.3)), 1e-8);
  EXPECT_EQ(r.summary["grid_points"], 1);
}

TEST(CliVerify1d, ShiftedTargetIsCentred) {
  const auto dir = fresh_dir("shift");
  json s = scenario("cauchy_to_gaussian_1d");
  s["target"]["mean"] = {3.0};
  const auto r = run("verify-1d", s, dir);
  ASSERT_EQ(r.exit_code, cli::kOk) << r.summary.dump(2);
  EXPECT_EQ(r.summary["target_shift"], 3.0);
  const Csv c = read_csv(dir / "cauchy_to_gaussian_1d_map1d.csv");
  EXPECT_NEAR(c.num(1000, "abs_T"), 0.0, 1e-9);
}

TEST(CliVerify1d, PolynomialExponentRecovered) {
  const auto dir = fresh_dir("poly");
  const auto r = run("verify-1d", scenario("polynomial_q2_p3_1d"), dir);
  ASSERT_EQ(r.exit_code, cli::kOk) << r.summary.dump(2);
  const Csv c = read_csv(dir / "polynomial_q2_p3_1d_map1d.csv");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < c.rows.size(); ++i)
    if (std::abs(c.num(i, "x")) > 10.0) {
      lx.push_back(std::log(std::abs(c.num(i, "x"))));
      ly.push_back(std::log(c.num(i, "abs_T")));
    }
  ASSERT_GT(lx.size(), 10u);
  EXPECT_NEAR(oracle::ls_slope(lx, ly), 0.5, 0.075);
  for (std::size_t i = 0; i < c.rows.size(); ++i) EXPECT_LE(c.num(i, "abs_T"), c.num(i, "bound_assembled"));
}

TEST(CliVerifyNd, Gaussian2dHasNoViolations) {
  const auto dir = fresh_dir("nd");
  const auto r = run("verify-nd", scenario("gaussian_2d_lp"), dir);
  ASSERT_EQ(r.exit_code, cli::kOk) << r.summary.dump(2);
  for (const auto& run : r.summary["runs"]) {
    EXPECT_EQ(run["monotone"]["violations"], 0);
    EXPECT_EQ(run["cone"]["violations"], 0);
    EXPECT_EQ(run["provenance"], "exact-lp");
    EXPECT_EQ(run["monotone"]["pairs"], 100 * 99 / 2);
  }
  const Csv m = read_csv(dir / "gaussian_2d_lp_n100_s1_maps.csv");
  EXPECT_EQ(m.header, (std::vector<std::string>{"x1", "x2", "T1", "T2", "provenance"}));
  EXPECT_EQ(m.rows.size(), 100u);
  const Csv c = read_csv(dir / "gaussian_2d_lp_n100_s2_couplings.csv");
  double total = 0.0;
  for (std::size_t i = 0; i < c.rows.size(); ++i) total += c.num(i, "mass");
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(CliVerifyNd, DuplicateTargetsAreJittered) {
  const auto dir = fresh_dir("dup");
  const json s = {{"schema", 1},
                  {"name", "dup"},
                  {"dim", 1},
                  {"source", {{"family", "points"}, {"points", {{0.0}, {1.0}}}}},
                  {"target", {{"family", "points"}, {"points", {{2.0}, {2.0}}}}},
                  {"nd", {{"n", {2}}}}};
  const auto r = run("verify-nd", s, dir);
  ASSERT_EQ(r.exit_code, cli::kOk) << r.summary.dump(2);
  const auto& run0 = r.summary["runs"][0];
  EXPECT_EQ(run0["jittered_targets"].size(), 1u);
  EXPECT_NE(run0["note"].get<std::string>().find("jitter"), std::string::npos);
}

TEST(CliVerifyNd, LpCapAdvisesSinkhorn) {
  const auto dir = fresh_dir("cap");
  json s = scenario("gaussian_2d_lp");
  s["nd"]["lp_cap"] = 50;
  const auto r = run("verify-nd", s, dir);
  EXPECT_EQ(r.exit_code, cli::kConfigError);
  EXPECT_NE(r.summary["error"].get<std::string>().find("sinkhorn"), std::string::npos);
}

// Sinkhorn maps only break the cone/monotone checks within the eps-scaled
// tolerance; compared against the LP run on the same samples.
TEST(CliVerifyNd, SinkhornWithinScaledTolerance) {
  const auto dir = fresh_dir("sk");
  json s = scenario("gaussian_2d_lp");
  s["nd"] = {{"n", {64}}, {"seeds", {4}}, {"solver", "sinkhorn"}, {"eps_start", 1.0}, {"eps_end", 0.01}};
  const auto sk = run("verify-nd", s, dir);
  ASSERT_EQ(sk.exit_code, cli::kOk) << sk.summary.dump(2);
  const auto& rs = sk.summary["runs"][0];
  EXPECT_EQ(rs["provenance"], "sinkhorn-barycentric");
  EXPECT_GT(rs["check_tolerance"].get<double>(), 1e-9);
  s["nd"]["solver"] = "lp";
  const auto lp = run("verify-nd", s, dir);
  ASSERT_EQ(lp.exit_code, cli::kOk);
  const auto& rl = lp.summary["runs"][0];
  EXPECT_EQ(rl["cone"]["violations"], 0);
  EXPECT_EQ(rl["monotone"]["violations"], 0);
  EXPECT_GE(rs["monotone"]["worst"].get<double>(), -rs["check_tolerance"].get<double>());
  EXPECT_LT(std::abs(rs["cost"].get<double>() / rl["cost"].get<double>() - 1.0), 0.05);
}

TEST(CliBoundCurve, PolynomialTailSlope) {
  const auto dir = fresh_dir("pc");
  ASSERT_EQ(run("bound-curve", scenario("polynomial_curve_q3_p2"), dir).exit_code, cli::kOk);
  const Csv c = read_csv(dir / "polynomial_curve_q3_p2_bounds.csv");
  EXPECT_EQ(c.header, (std::vector<std::string>{"x_norm", "bound_published", "bound_assembled", "theorem", "flavor_notes"}));
  const std::size_t a = c.rows.size() - 20, b = c.rows.size() - 1;
  const double slope = std::log(c.num(b, "bound_assembled") / c.num(a, "bound_assembled")) /
                       std::log(c.num(b, "x_norm") / c.num(a, "x_norm"));
  EXPECT_NEAR(slope, 2.0, 1e-3);
  for (std::size_t i = 1; i < c.rows.size(); ++i) EXPECT_GT(c.num(i, "x_norm"), c.num(i - 1, "x_norm"));
}

TEST(CliBoundCurve, SubgaussianSqrtLogShape) {
  const auto dir = fresh_dir("sc");
  ASSERT_EQ(run("bound-curve", scenario("subgaussian_curve"), dir).exit_code, cli::kOk);
  const Csv c = read_csv(dir / "subgaussian_curve_bounds.csv");
  std::vector<double> u, y;
  for (std::size_t i = 0; i < c.rows.size(); ++i)
    if (c.num(i, "x_norm") >= 1e50) {
      u.push_back(std::sqrt(std::log1p(c.num(i, "x_norm"))));
      y.push_back(c.num(i, "bound_published"));
    }
  const double b = oracle::ls_slope(u, y);
  const double expected = 3.0 * std::sqrt(2.0);  // 3 sqrt(2A) sqrt(d) sigma, A = d = sigma = 1
  EXPECT_LT(std::abs(b / expected - 1.0), 0.05) << b;
  EXPECT_NEAR(c.num(0, "bound_published"), 10.157, 5e-3);
}

TEST(CliBoundCurve, LogconcaveDimensionSweep) {
  const auto dir = fresh_dir("lc");
  const auto r = run("bound-curve", scenario("logconcave_dim_sweep"), dir);
  ASSERT_EQ(r.exit_code, cli::kOk);
  EXPECT_EQ(r.summary["curves"].size(), 4u);
  for (int d : {2, 4, 8, 16}) {
    const Csv c = read_csv(dir / ("logconcave_dim_sweep_d" + std::to_string(d) + "_bounds.csv"));
    EXPECT_EQ(c.rows.size(), 161u);
    EXPECT_EQ(c.rows[0][c.col("theorem")], "logconcave(d=" + std::to_string(d) + ")");
  }
}

TEST(CliBoundCurve, PublishedDegeneracyIsRecordedPerPoint) {
  const auto dir = fresh_dir("deg");
  const json s = {{"schema", 1},
                  {"name", "deg"},
                  {"theorem", {{"kind", "subgaussian"}, {"A", 0.1}, {"V0", 1e-5}, {"sigma2", 1.0}}},
                  {"curve", {{"x_min", 1e-2}, {"x_max", 1e3}, {"points", 11}}}};
  const auto r = run("bound-curve", s, dir);
  ASSERT_EQ(r.exit_code, cli::kOk) << r.summary.dump(2);
  const Csv c = read_csv(dir / "deg_bounds.csv");
  EXPECT_EQ(c.rows[0][c.col("bound_published")], "nan");
  EXPECT_EQ(c.rows[0][c.col("flavor_notes")], "published-degenerate");
  EXPECT_TRUE(std::isfinite(c.num(0, "bound_assembled")));
  EXPECT_GT(r.summary["curves"][0]["published_degenerate_points"].get<int>(), 0);
}

TEST(CliBoundCurve, FlavorSelection) {
  const auto dir = fresh_dir("flav");
  ASSERT_EQ(run("bound-curve", scenario("subgaussian_curve"), dir, cli::FlavorSel::Published).exit_code, cli::kOk);
  const Csv c = read_csv(dir / "subgaussian_curve_bounds.csv");
  EXPECT_EQ(c.rows[3][c.col("bound_assembled")], "nan");
  EXPECT_TRUE(std::isfinite(c.num(3, "bound_published")));
  EXPECT_THROW(cli::parse_flavor("sharp"), ConfigurationError);
}

TEST(CliChecks, ConcentrationSuitesPass) {
  const auto dir = fresh_dir("conc");
  const auto lap = run("concentration-check", scenario("tails_laplace_2d"), dir);
  ASSERT_EQ(lap.exit_code, cli::kOk) << lap.summary.dump(2);
  for (const char* t : {"norm", "linear", "cone"}) {
    const Csv c = read_csv(dir / (std::string("tails_laplace_2d_tails_") + t + ".csv"));
    EXPECT_EQ(c.header, (std::vector<std::string>{"r", "estimate", "stderr", "bound", "pass"}));
    EXPECT_EQ(c.rows.size(), 5u);
  }
  const auto poly = run("concentration-check", scenario("tails_polyv_1d"), dir);
  ASSERT_EQ(poly.exit_code, cli::kOk) << poly.summary.dump(2);
  const Csv c = read_csv(dir / "tails_polyv_1d_tails_norm.csv");
  // q = 3 in 1D: density (1+x^2)^{-3/2} / 2, so P(|Y| >= r) = 1 - r / sqrt(1+r^2)
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    const double r = c.num(i, "r");
    const double tail = 1.0 - r / std::sqrt(1.0 + r * r);
    EXPECT_LE(std::abs(c.num(i, "estimate") - tail), 4.0 * c.num(i, "stderr") + 1e-12) << r;
  }
}

TEST(CliChecks, BallProbabilitiesPass) {
  const auto dir = fresh_dir("ball");
  const auto r = run("ballprob-check", scenario("ballprob_polyv_2d"), dir);
  ASSERT_EQ(r.exit_code, cli::kOk) << r.summary.dump(2);
  const Csv c = read_csv(dir / "ballprob_polyv_2d_ball_poly.csv");
  EXPECT_EQ(c.header, (std::vector<std::string>{"x_norm", "analytic_lower", "mc_estimate", "mc_stderr", "pass"}));
  for (std::size_t i = 0; i < c.rows.size(); ++i) EXPECT_LE(c.num(i, "analytic_lower"), c.num(i, "mc_estimate"));

  json s = scenario("ballprob_polyv_2d");
  s["ball"]["method"] = "mc";
  s["mc"]["n"] = 100000;
  EXPECT_EQ(run("ballprob-check", s, dir).exit_code, cli::kOk);
}

TEST(CliDeterminism, RepeatedRunsAreByteIdentical) {
  const std::vector<std::pair<std::string, std::string>> cases = {{"verify-1d", "cauchy_to_gaussian_1d"},
                                                                  {"verify-nd", "gaussian_2d_lp"},
                                                                  {"concentration-check", "tails_laplace_2d"},
                                                                  {"bound-curve", "logconcave_dim_sweep"}};
  const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  for (const auto& [sub, name] : cases) {
    run(sub, scenario(name), a);
    run(sub, scenario(name), b);
  }
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
    ++compared;
  }
  EXPECT_GE(compared, 12u);
}

TEST(CliDeterminism, SeedOverrideChangesSamples) {
  const auto a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
  cli::Options opt;
  opt.out_dir = a;
  cli::run_guarded("concentration-check", scenario("tails_laplace_2d"), opt, "x");
  opt.out_dir = b;
  opt.seed = 99;
  cli::run_guarded("concentration-check", scenario("tails_laplace_2d"), opt, "x");
  EXPECT_NE(slurp(a / "tails_laplace_2d_tails_norm.csv"), slurp(b / "tails_laplace_2d_tails_norm.csv"));
}
