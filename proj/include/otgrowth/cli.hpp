#pragma once

// Scenario-driven pipelines behind the otgrowth_cli tool. Each run_* function
// takes a parsed scenario, writes its CSV/JSON files into the output
// directory and returns a report with the process exit code.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "otgrowth/ballprob.hpp"
#include "otgrowth/bounds.hpp"
#include "otgrowth/concentration.hpp"
#include "otgrowth/measures.hpp"
#include "otgrowth/random.hpp"
#include "otgrowth/transport.hpp"

namespace otgrowth::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kViolation = 2, kGateFailure = 3, kConfigError = 4 };

enum class FlavorSel { Published, Assembled, Both };

inline FlavorSel parse_flavor(const std::string& s) {
  if (s == "published") return FlavorSel::Published;
  if (s == "assembled") return FlavorSel::Assembled;
  if (s == "both") return FlavorSel::Both;
  throw ConfigurationError("flavor must be published, assembled or both");
}

struct Options {
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
  FlavorSel flavor = FlavorSel::Both;
};

struct Report {
  int exit_code = kOk;
  json summary;
  std::vector<std::string> files;
};

// ---- formatting ----------------------------------------------------------------

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw ConfigurationError("cannot open " + path.string() + " for writing");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

// ---- scenario access -------------------------------------------------------------

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigurationError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigurationError("unknown key '" + k + "' in " + where);
}

inline double num(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigurationError(where + " is missing '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigurationError(where + "." + key + " must be a number");
  return j.at(key).get<double>();
}

inline double num_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? num(j, key, where) : fallback;
}

inline std::optional<double> num_opt(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return std::nullopt;
  return num(j, key, where);
}

inline std::vector<double> num_list(const json& j, const char* key, std::vector<double> fallback,
                                    const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& a = j.at(key);
  if (a.is_number()) return {a.get<double>()};
  if (!a.is_array()) throw ConfigurationError(where + "." + key + " must be a number or an array");
  std::vector<double> out;
  for (const auto& v : a) {
    if (!v.is_number()) throw ConfigurationError(where + "." + key + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline std::size_t count(const json& j, const char* key, std::size_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigurationError(where + "." + key + " must be a non-negative integer");
  return v.get<std::size_t>();
}

inline std::string str_or(const json& j, const char* key, std::string fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigurationError(where + "." + key + " must be a string");
  return j.at(key).get<std::string>();
}

inline const json& section(const json& s, const char* key) {
  static const json empty = json::object();
  return s.contains(key) ? s.at(key) : empty;
}

inline void validate_top_level(const json& s) {
  check_keys(s, {"schema", "name", "dim", "source", "target", "theorem", "grid", "nd", "mc", "tolerances", "curve",
                 "tails", "ball", "outputs"},
             "scenario");
  if (!s.contains("schema") || !s.at("schema").is_number_integer() || s.at("schema").get<int>() != 1)
    throw ConfigurationError("scenario.schema must be 1");
}

struct Tolerances {
  double stat_sigmas = 3.0;
  double numeric = 1e-9;
};

inline Tolerances tolerances(const json& s) {
  const json& t = section(s, "tolerances");
  check_keys(t, {"stat_sigmas", "numeric"}, "tolerances");
  return {num_or(t, "stat_sigmas", 3.0, "tolerances"), num_or(t, "numeric", 1e-9, "tolerances")};
}

inline int scenario_dim(const json& s) {
  const double d = num_or(s, "dim", 1.0, "scenario");
  if (d < 1 || d != std::floor(d)) throw ConfigurationError("scenario.dim must be a positive integer");
  return static_cast<int>(d);
}

inline std::uint64_t scenario_seed(const json& s, const Options& opt) {
  const json& mc = section(s, "mc");
  check_keys(mc, {"n", "seed"}, "mc");
  if (opt.seed) return *opt.seed;
  return static_cast<std::uint64_t>(count(mc, "seed", 1, "mc"));
}

inline std::size_t scenario_mc_n(const json& s, std::size_t fallback) {
  return count(section(s, "mc"), "n", fallback, "mc");
}

inline std::string prefix(const json& s, const std::string& default_name) {
  const json& o = section(s, "outputs");
  check_keys(o, {"prefix"}, "outputs");
  return str_or(o, "prefix", str_or(s, "name", default_name, "scenario"), "outputs");
}

// ---- measures --------------------------------------------------------------------

// Declared concentration of a target measure.
struct DeclaredConcentration {
  std::string kind;  // subgaussian | exponential | polytail | none
  std::optional<ConcentrationProfile> profile;
  std::optional<double> M_tail, p;
  json as_json() const {
    json j;
    j["kind"] = kind;
    if (profile) {
      json params = json::object();
      std::visit(
          [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Subgaussian>) params["sigma2"] = k.sigma2;
            else if constexpr (std::is_same_v<T, Exponential>) {
              params["c"] = k.c;
              params["sigma"] = k.sigma;
            } else if constexpr (std::is_same_v<T, PolyConc>) {
              params["C"] = k.C;
              params["ell"] = k.ell;
            }
          },
          profile->kind());
      j["params"] = params;
      j["r0"] = profile->r0();
    } else if (M_tail) {
      j["params"] = {{"M", *M_tail}, {"p", *p}};
      j["r0"] = 0.0;
    }
    return j;
  }
};

struct MeasureSpec {
  std::optional<DensityModel> model;  // absent for explicit point clouds
  std::optional<PointSet> points;
  DeclaredConcentration conc;
  std::string family;
};

inline DeclaredConcentration parse_concentration(const json& j, const DensityModel* model, const std::string& where) {
  DeclaredConcentration c;
  if (j.is_null()) {
    if (model && model->params().sigma2) {
      c.kind = "subgaussian";
      c.profile = subgaussian_profile(*model->params().sigma2);
    } else if (model && model->params().c && model->params().sigma) {
      c.kind = "exponential";
      c.profile = exponential_profile(*model->params().c, *model->params().sigma);
    } else {
      c.kind = "none";
    }
    return c;
  }
  check_keys(j, {"kind", "sigma2", "c", "sigma", "M", "p"}, where);
  c.kind = str_or(j, "kind", "", where);
  const StructuralParams none;
  const StructuralParams& mp = model ? model->params() : none;
  if (c.kind == "subgaussian") {
    c.profile = subgaussian_profile(j.contains("sigma2") ? num(j, "sigma2", where) : mp.sigma2.value_or(-1.0));
  } else if (c.kind == "exponential") {
    c.profile = exponential_profile(j.contains("c") ? num(j, "c", where) : mp.c.value_or(-1.0),
                                    j.contains("sigma") ? num(j, "sigma", where) : mp.sigma.value_or(-1.0));
  } else if (c.kind == "polytail") {
    c.M_tail = j.contains("M") ? num(j, "M", where) : mp.M.value_or(-1.0);
    c.p = j.contains("p") ? num(j, "p", where) : mp.p.value_or(-1.0);
    polytail_psi(*c.M_tail, *c.p, model ? model->dim() : 1);  // validates
  } else {
    throw ConfigurationError(where + ".kind must be subgaussian, exponential or polytail");
  }
  return c;
}

inline Point point_from(const json& a, int d, const std::string& where) {
  if (!a.is_array() || a.size() != static_cast<std::size_t>(d))
    throw ConfigurationError(where + " must be an array of length " + std::to_string(d));
  Point p;
  for (const auto& v : a) {
    if (!v.is_number()) throw ConfigurationError(where + " must hold numbers");
    p.push_back(v.get<double>());
  }
  return p;
}

inline MeasureSpec parse_measure(const json& j, int d, const std::string& where) {
  check_keys(j, {"family", "sigma", "mean", "kappa", "q", "scale", "lo", "hi", "points", "declared", "concentration"},
             where);
  MeasureSpec m;
  m.family = str_or(j, "family", "", where);
  if (m.family == "gaussian") {
    const double sigma = num_or(j, "sigma", 1.0, where);
    if (!(sigma > 0.0)) throw ConfigurationError(where + ".sigma must be positive");
    if (j.contains("mean")) {
      const Point mean = point_from(j.at("mean"), d, where + ".mean");
      m.model = DensityModel::gaussian(Eigen::Map<const Eigen::VectorXd>(mean.data(), d),
                                       Eigen::MatrixXd::Identity(d, d) * sigma * sigma);
    } else {
      m.model = DensityModel::standard_gaussian(d, sigma);
    }
  } else if (m.family == "polyv") {
    m.model = DensityModel::polyv(d, num_or(j, "kappa", 1.0, where), num(j, "q", where));
  } else if (m.family == "laplace") {
    m.model = DensityModel::laplace(d, num_or(j, "scale", 1.0, where));
  } else if (m.family == "uniform") {
    m.model = DensityModel::uniform(point_from(j.at("lo"), d, where + ".lo"), point_from(j.at("hi"), d, where + ".hi"));
  } else if (m.family == "points") {
    if (!j.contains("points") || !j.at("points").is_array() || j.at("points").empty())
      throw ConfigurationError(where + ".points must be a non-empty array");
    PointSet ps(0, d);
    for (const auto& p : j.at("points")) ps.push_back(point_from(p, d, where + ".points[]"));
    m.points = std::move(ps);
  } else {
    throw ConfigurationError(where + ".family must be gaussian, polyv, laplace, uniform or points");
  }
  if (j.contains("declared")) {
    if (!m.model) throw ConfigurationError(where + ".declared needs a density family");
    const json& dj = j.at("declared");
    const std::string w = where + ".declared";
    check_keys(dj, {"A", "L", "q", "M", "p", "V0"}, w);
    auto& p = m.model->params();
    if (auto v = num_opt(dj, "A", w)) p.A = v;
    if (auto v = num_opt(dj, "L", w)) p.L = v;
    if (auto v = num_opt(dj, "q", w)) p.q = v;
    if (auto v = num_opt(dj, "M", w)) p.M = v;
    if (auto v = num_opt(dj, "p", w)) p.p = v;
    if (auto v = num_opt(dj, "V0", w)) p.V0 = v;
  }
  m.conc = parse_concentration(j.contains("concentration") ? j.at("concentration") : json(), m.model ? &*m.model : nullptr,
                               where + ".concentration");
  return m;
}

inline std::optional<MeasureSpec> measure(const json& s, const char* key, int d) {
  if (!s.contains(key)) return std::nullopt;
  return parse_measure(s.at(key), d, key);
}

// ---- theorem resolution ------------------------------------------------------------

struct TheoremSpec {
  Theorem theorem;
  BoundParams p;
  AlphaSource alpha_source = AlphaSource::Assembled;
};

inline TheoremSpec parse_theorem(const json& s, int d, const MeasureSpec* src, const MeasureSpec* tgt) {
  if (!s.contains("theorem")) throw ConfigurationError("scenario has no theorem section");
  const json& t = s.at("theorem");
  check_keys(t, {"kind", "A", "V0", "sigma2", "c", "sigma", "c1", "c2", "L", "q", "M", "p", "alpha",
                 "proof_intermediate"},
             "theorem");
  TheoremSpec out;
  out.p.d = d;
  const std::string kind = str_or(t, "kind", "", "theorem");
  const StructuralParams none;
  const StructuralParams& sp = src && src->model ? src->model->params() : none;
  const StructuralParams& tp = tgt && tgt->model ? tgt->model->params() : none;
  auto pick = [&](const char* key, std::optional<double> fallback) -> double {
    if (t.contains(key)) return num(t, key, "theorem");
    if (fallback) return *fallback;
    throw ConfigurationError(std::string("theorem.") + key + " is neither given nor declared by the measures");
  };
  auto source_v0 = [&]() -> std::optional<double> {
    if (sp.V0) return sp.V0;
    if (src && src->model) return src->model->v_at_origin();
    return std::nullopt;
  };
  const ConcentrationProfile* prof = tgt && tgt->conc.profile ? &*tgt->conc.profile : nullptr;
  if (kind == "subgaussian") {
    out.theorem = Theorem::SubgaussianTarget;
    out.p.A = pick("A", sp.A);
    out.p.V0 = pick("V0", source_v0());
    std::optional<double> s2;
    if (prof)
      if (const auto* k = std::get_if<Subgaussian>(&prof->kind())) s2 = k->sigma2;
    out.p.sigma2 = pick("sigma2", s2);
    if (t.contains("proof_intermediate")) out.p.proof_intermediate = t.at("proof_intermediate").get<bool>();
  } else if (kind == "exponential" || kind == "logconcave") {
    out.theorem = kind == "exponential" ? Theorem::ExponentialTarget : Theorem::LogConcaveTarget;
    out.p.A = pick("A", sp.A);
    out.p.V0 = pick("V0", source_v0());
    if (kind == "exponential") {
      std::optional<double> c, sg;
      if (prof)
        if (const auto* k = std::get_if<Exponential>(&prof->kind())) {
          c = k->c;
          sg = k->sigma;
        }
      out.p.c = pick("c", c);
      out.p.sigma = pick("sigma", sg);
    } else {
      out.p.c1 = pick("c1", std::nullopt);
      out.p.c2 = pick("c2", std::nullopt);
    }
  } else if (kind == "polynomial") {
    out.theorem = Theorem::PolynomialDensities;
    out.p.L = pick("L", sp.L);
    out.p.q = pick("q", sp.q);
    out.p.M_tail = pick("M", tgt && tgt->conc.M_tail ? tgt->conc.M_tail : tp.M);
    out.p.p = pick("p", tgt && tgt->conc.p ? tgt->conc.p : tp.p);
    if (t.contains("alpha")) {
      out.alpha_source = AlphaSource::UserSupplied;
      out.p.alpha = num(t, "alpha", "theorem");
    }
  } else {
    throw ConfigurationError("theorem.kind must be subgaussian, exponential, logconcave or polynomial");
  }
  return out;
}

inline GrowthBound make_bound(const TheoremSpec& t, Flavor f, int d) {
  const BoundParams& p = t.p;
  switch (t.theorem) {
    case Theorem::SubgaussianTarget: return GrowthBound::subgaussian(*p.A, *p.V0, *p.sigma2, d, f, p.proof_intermediate);
    case Theorem::ExponentialTarget: return GrowthBound::exponential(*p.A, *p.V0, *p.c, *p.sigma, d, f);
    case Theorem::LogConcaveTarget: return GrowthBound::logconcave(*p.A, *p.V0, *p.c1, *p.c2, d, f);
    case Theorem::PolynomialDensities:
      return GrowthBound::polynomial(*p.L, *p.q, *p.M_tail, *p.p, d, f, t.alpha_source, p.alpha);
    default: break;
  }
  throw ConfigurationError("theorem cannot be evaluated from the scenario");
}

struct BoundPair {
  std::optional<GrowthBound> published, assembled;
};

inline BoundPair make_bounds(const TheoremSpec& t, FlavorSel sel, int d) {
  BoundPair b;
  if (sel != FlavorSel::Assembled) b.published = make_bound(t, Flavor::Published, d);
  if (sel != FlavorSel::Published) b.assembled = make_bound(t, Flavor::Assembled, d);
  return b;
}

// NaN marks a degenerate published formula at this |x|.
inline double eval_or_nan(const std::optional<GrowthBound>& b, double x, bool* degenerate = nullptr) {
  if (!b) return std::nan("");
  try {
    return b->evaluate(x);
  } catch (const FormulaDegenerate&) {
    if (degenerate) *degenerate = true;
    return std::nan("");
  }
}

inline json bound_json(const GrowthBound& b) {
  json j;
  j["theorem"] = to_string(b.theorem());
  j["flavor"] = to_string(b.flavor());
  j["lambda_policy"] = b.params().lambda_policy;
  json consts = json::array();
  for (const auto& c : b.constants()) consts.push_back({{"name", c.name}, {"value", c.value}, {"note", c.note}});
  j["constants"] = consts;
  j["notes"] = b.notes();
  return j;
}

// ---- hypothesis gate -----------------------------------------------------------------

struct Gate {
  bool pass = true;
  json checks = json::array();

  void add(const std::string& name, bool ok, json detail) {
    detail["check"] = name;
    detail["pass"] = ok;
    checks.push_back(std::move(detail));
    pass = pass && ok;
  }
};

inline void gate_loggrad(Gate& g, const DensityModel& m, double A, double V0, const char* who) {
  const auto rep = verify_log_grad_decay(m, A, radial_grid(m.dim(), 1e4));
  json d = {{"measure", who}, {"declared_A", A}, {"worst_ratio", rep.worst_ratio}, {"message", rep.message}};
  if (!rep.worst_point.empty()) d["worst_point"] = rep.worst_point;
  g.add("log-grad-decay", rep.pass && !rep.domain_violation, d);
  const double v0 = m.v_at_origin();
  // the ball lower bound only uses V0 through exp(-d log V0): larger is safe
  g.add("V0-upper", V0 >= v0 * (1.0 - 1e-12), {{"measure", who}, {"declared_V0", V0}, {"actual_V0", v0}});
}

inline void gate_profile(Gate& g, const DensityModel& target, const ConcentrationProfile& phi, std::size_t n,
                         std::uint64_t seed, double sigmas) {
  const PointSet ys = sample(target, n, derive_seed(seed, 0x9a7e)).points;
  const int d = target.dim();
  std::vector<double> rs;
  for (double r = 0.25; r <= 8.0; r *= 1.5) rs.push_back(r);
  Point e1(static_cast<std::size_t>(d), 0.0);
  e1[0] = 1.0;
  double worst = -1e300;
  double worst_r = 0.0;
  for (const TestFunction& f : {TestFunction{NormTest{}}, TestFunction{LinearTest{e1}}})
    for (const auto& row : empirical_tail(ys, f, rs)) {
      if (row.r < phi.r0()) continue;
      const double excess = row.estimate - (phi(row.r) + sigmas * row.std_error);
      if (excess > worst) {
        worst = excess;
        worst_r = row.r;
      }
    }
  g.add("profile-domination", worst <= 0.0,
        {{"measure", "target"}, {"profile", phi.kind_name()}, {"samples", n}, {"worst_excess", worst}, {"at_r", worst_r}});
}

// V(y) >= M |y|^p (target) or V(x) <= L (1 + |x|^q) (source) on a radial grid.
inline void gate_poly(Gate& g, const DensityModel& m, double K, double e, bool upper, const char* who) {
  double worst = 0.0;
  Point at;
  for (const Point& x : radial_grid(m.dim(), 1e4)) {
    const double r = norm(x);
    const double lv = m.log_v(x);
    const double ref = upper ? std::log(K) + std::log1p(std::pow(r, e)) : (r > 0 ? std::log(K) + e * std::log(r) : -1e300);
    const double excess = upper ? lv - ref : ref - lv;
    if (excess > worst) {
      worst = excess;
      at = x;
    }
  }
  json d = {{"measure", who}, {"worst_log_excess", worst}};
  if (!at.empty()) d["worst_point"] = at;
  g.add(upper ? "V-upper-polynomial" : "V-lower-polynomial", worst <= 1e-9, d);
}

inline Gate run_gate(const TheoremSpec& t, const MeasureSpec* src, const MeasureSpec* tgt, std::size_t n,
                     std::uint64_t seed, const Tolerances& tol) {
  Gate g;
  const bool loggrad = t.theorem == Theorem::SubgaussianTarget || t.theorem == Theorem::ExponentialTarget ||
                       t.theorem == Theorem::LogConcaveTarget;
  if (src && src->model) {
    if (loggrad) gate_loggrad(g, *src->model, *t.p.A, *t.p.V0, "source");
    if (t.theorem == Theorem::PolynomialDensities) gate_poly(g, *src->model, *t.p.L, *t.p.q, true, "source");
  }
  if (tgt && tgt->model) {
    if (t.theorem == Theorem::SubgaussianTarget)
      gate_profile(g, *tgt->model, subgaussian_profile(*t.p.sigma2), n, seed, tol.stat_sigmas);
    if (t.theorem == Theorem::ExponentialTarget)
      gate_profile(g, *tgt->model, exponential_profile(*t.p.c, *t.p.sigma), n, seed, tol.stat_sigmas);
    if (t.theorem == Theorem::PolynomialDensities) gate_poly(g, *tgt->model, *t.p.M_tail, *t.p.p, false, "target");
  }
  return g;
}

inline void write_summary(Report& r, const Options& opt, const std::string& pfx) {
  const auto path = opt.out_dir / (pfx + "_summary.json");
  r.files.push_back(path.filename().string());
  r.summary["files"] = r.files;
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot open " + path.string() + " for writing");
  out << r.summary.dump(2) << '\n';
}

// No bound rows are written for a failed gate, only the summary.
inline Report gate_failure(const std::string& subcommand, const std::string& name, const Gate& g, const Options& opt,
                           const std::string& pfx) {
  Report r;
  r.exit_code = kGateFailure;
  r.summary = {{"scenario", name}, {"subcommand", subcommand}, {"status", "gate-failed"}, {"gate", g.checks}};
  write_summary(r, opt, pfx);
  return r;
}

// Mean of a 1D target (families other than shifted Gaussians are symmetric).
inline double target_mean_1d(const DensityModel& m) {
  if (const auto* g = std::get_if<GaussianFamily>(&m.family())) return g->mean(0);
  if (const auto* u = std::get_if<UniformFamily>(&m.family())) return 0.5 * (u->lo[0] + u->hi[0]);
  return 0.0;
}

// ---- verify-1d -------------------------------------------------------------------------

inline Report run_verify_1d(const json& s, const Options& opt, const std::string& default_name = "scenario") {
  validate_top_level(s);
  const std::string name = str_or(s, "name", default_name, "scenario");
  const std::string pfx = prefix(s, default_name);
  if (scenario_dim(s) != 1) throw ConfigurationError("verify-1d needs dim = 1");
  const auto src = measure(s, "source", 1), tgt = measure(s, "target", 1);
  if (!src || !src->model || !tgt || !tgt->model) throw ConfigurationError("verify-1d needs source and target densities");
  const Tolerances tol = tolerances(s);
  const std::uint64_t seed = scenario_seed(s, opt);
  const TheoremSpec th = parse_theorem(s, 1, &*src, &*tgt);

  const Gate gate = run_gate(th, &*src, &*tgt, scenario_mc_n(s, 20000), seed, tol);
  if (!gate.pass) return gate_failure("verify-1d", name, gate, opt, pfx);

  const json& gj = section(s, "grid");
  check_keys(gj, {"points", "p_min", "x"}, "grid");
  std::vector<double> grid;
  if (gj.contains("x")) grid = num_list(gj, "x", {}, "grid");
  else grid = default_grid_1d(*src->model, count(gj, "points", 2001, "grid"), num_or(gj, "p_min", 1e-6, "grid"));

  const Map1D map = quantile_map_1d(*src->model, *tgt->model, grid);
  const double shift = target_mean_1d(*tgt->model);
  const BoundPair bounds = make_bounds(th, opt.flavor, 1);

  Report r;
  const auto csv_name = pfx + "_map1d.csv";
  CsvWriter csv(opt.out_dir / csv_name, {"x", "abs_T", "bound_published", "bound_assembled", "pass"});
  r.files.push_back(csv_name);
  std::size_t violations = 0, degenerate_points = 0;
  double max_ratio = 0.0;
  for (std::size_t i = 0; i < map.grid.size(); ++i) {
    const double x = map.grid[i], t = std::abs(map.values[i] - shift);
    bool degenerate = false;
    const double bp = eval_or_nan(bounds.published, std::abs(x), &degenerate);
    const double ba = eval_or_nan(bounds.assembled, std::abs(x));
    degenerate_points += degenerate;
    bool pass = true;
    for (double b : {bp, ba})
      if (!std::isnan(b)) {
        pass = pass && t <= b;
        if (b > 0) max_ratio = std::max(max_ratio, t / b);
      }
    violations += !pass;
    csv.row({fmt(x), fmt(t), fmt(bp), fmt(ba), pass ? "1" : "0"});
  }

  r.exit_code = violations ? kViolation : kOk;
  r.summary = {{"scenario", name},
               {"subcommand", "verify-1d"},
               {"status", violations ? "violation" : "pass"},
               {"grid_points", map.grid.size()},
               {"violations", violations},
               {"max_ratio", max_ratio},
               {"pushforward_error", pushforward_error(map, *tgt->model)},
               {"strictly_increasing", map.strictly_increasing()},
               {"target_shift", shift},
               {"published_degenerate_points", degenerate_points},
               {"target_concentration", tgt->conc.as_json()},
               {"gate", gate.checks}};
  json bj = json::array();
  for (const auto* b : {&bounds.published, &bounds.assembled})
    if (*b) bj.push_back(bound_json(**b));
  r.summary["bounds"] = bj;
  write_summary(r, opt, pfx);
  return r;
}

// ---- verify-nd -------------------------------------------------------------------------

inline PointSet draw(const MeasureSpec& m, std::size_t n, std::uint64_t seed) {
  if (m.points) return *m.points;
  return sample(*m.model, n, seed).points;
}

inline Report run_verify_nd(const json& s, const Options& opt, const std::string& default_name = "scenario") {
  validate_top_level(s);
  const std::string name = str_or(s, "name", default_name, "scenario");
  const std::string pfx = prefix(s, default_name);
  const int d = scenario_dim(s);
  const auto src = measure(s, "source", d), tgt = measure(s, "target", d);
  if (!src || !tgt) throw ConfigurationError("verify-nd needs source and target");
  const Tolerances tol = tolerances(s);
  const std::uint64_t seed = scenario_seed(s, opt);

  const json& nj = section(s, "nd");
  check_keys(nj, {"n", "seeds", "lambdas", "solver", "eps_start", "eps_end", "lp_cap"}, "nd");
  const auto ns = num_list(nj, "n", {100}, "nd");
  std::vector<double> seeds = num_list(nj, "seeds", {static_cast<double>(seed)}, "nd");
  if (opt.seed) seeds = {static_cast<double>(*opt.seed)};
  const auto lambdas = num_list(nj, "lambdas", {0.5, 1.0, 2.0}, "nd");
  const std::string solver = str_or(nj, "solver", "lp", "nd");
  if (solver != "lp" && solver != "sinkhorn") throw ConfigurationError("nd.solver must be lp or sinkhorn");
  const double eps_start = num_or(nj, "eps_start", 1.0, "nd"), eps_end = num_or(nj, "eps_end", 0.01, "nd");
  const std::size_t lp_cap = count(nj, "lp_cap", 512, "nd");

  std::optional<TheoremSpec> th;
  Gate gate;
  if (s.contains("theorem")) {
    th = parse_theorem(s, d, &*src, &*tgt);
    gate = run_gate(*th, &*src, &*tgt, scenario_mc_n(s, 20000), seed, tol);
    if (!gate.pass) return gate_failure("verify-nd", name, gate, opt, pfx);
  }
  std::optional<GrowthBound> bound;
  if (th) bound = make_bound(*th, Flavor::Assembled, d);

  Report r;
  json runs = json::array();
  bool any_violation = false;
  for (double nd : ns) {
    const auto n = static_cast<std::size_t>(nd);
    if (solver == "lp" && n > lp_cap)
      throw ConfigurationError("n = " + std::to_string(n) + " exceeds the LP cap " + std::to_string(lp_cap) +
                               "; use nd.solver = \"sinkhorn\"");
    for (double sd : seeds) {
      const auto sseed = static_cast<std::uint64_t>(sd);
      PointSet X = draw(*src, n, derive_seed(sseed, 1));
      PointSet Y = draw(*tgt, n, derive_seed(sseed, 2));
      if (X.size() != Y.size()) throw ConfigurationError("source and target point counts differ");
      const auto jx = jitter_duplicates(X, derive_seed(sseed, 3));
      const auto jy = jitter_duplicates(Y, derive_seed(sseed, 4));
      // centre the target empirically
      Point shift(static_cast<std::size_t>(d), 0.0);
      for (std::size_t i = 0; i < Y.size(); ++i)
        for (int k = 0; k < d; ++k) shift[k] += Y.row(i)[k] / static_cast<double>(Y.size());
      for (std::size_t i = 0; i < Y.size(); ++i)
        for (int k = 0; k < d; ++k) Y.row(i)[k] -= shift[k];

      const auto A = WeightedPoints::uniform(X), B = WeightedPoints::uniform(Y);
      const Coupling pi = solver == "lp" ? discrete_ot_exact(A, B) : sinkhorn_ladder(A, B, eps_start, eps_end);
      const DiscreteMap map = barycentric_map(pi, X, Y);
      const double check_tol = solver == "lp" ? tol.numeric : std::max(tol.numeric, eps_end * diameter(Y));

      const auto mono = check_monotone(map, check_tol);
      std::size_t cone_violations = 0, cone_checks = 0, skipped = 0;
      double cone_worst = std::numeric_limits<double>::infinity();
      for (double lam : lambdas)
        for (std::size_t a = 0; a < map.size(); ++a) {
          if (norm(map.images.row(a)) == 0.0) {
            ++skipped;
            continue;
          }
          const auto c = check_cone_inclusion(map, a, lam, check_tol);
          cone_checks += c.points_in_ball;
          cone_violations += c.violations.size();
          cone_worst = std::min(cone_worst, c.worst);
        }

      const std::string tag = pfx + "_n" + std::to_string(n) + "_s" + std::to_string(sseed);
      {
        std::vector<std::string> header;
        for (int k = 1; k <= d; ++k) header.push_back("x" + std::to_string(k));
        for (int k = 1; k <= d; ++k) header.push_back("T" + std::to_string(k));
        header.push_back("provenance");
        CsvWriter csv(opt.out_dir / (tag + "_maps.csv"), header);
        for (std::size_t i = 0; i < map.size(); ++i) {
          std::vector<std::string> row;
          for (double v : map.sources.row(i)) row.push_back(fmt(v));
          for (double v : map.images.row(i)) row.push_back(fmt(v));
          row.push_back(to_string(map.provenance));
          csv.row(row);
        }
        r.files.push_back(tag + "_maps.csv");
      }
      {
        CsvWriter csv(opt.out_dir / (tag + "_couplings.csv"), {"i", "j", "mass"});
        for (const auto& e : pi.entries) csv.row({std::to_string(e.i), std::to_string(e.j), fmt(e.mass)});
        r.files.push_back(tag + "_couplings.csv");
      }

      json run = {{"n", n},
                  {"seed", sseed},
                  {"solver", to_string(pi.solver)},
                  {"provenance", to_string(map.provenance)},
                  {"cost", pi.cost},
                  {"check_tolerance", check_tol},
                  {"target_shift", shift},
                  {"jittered_sources", jx},
                  {"jittered_targets", jy},
                  {"monotone", {{"pairs", mono.pairs_checked}, {"violations", mono.violations.size()}, {"worst", mono.worst}}},
                  {"cone",
                   {{"lambdas", lambdas},
                    {"points_checked", cone_checks},
                    {"violations", cone_violations},
                    {"worst", cone_checks ? cone_worst : 0.0},
                    {"anchors_skipped", skipped}}}};
      if (pi.solver == CouplingSolver::Sinkhorn) {
        run["epsilon"] = pi.epsilon;
        run["iterations"] = pi.iterations;
        run["marginal_residual"] = pi.marginal_residual;
      }
      if (bound) {
        std::size_t dominated = 0;
        for (std::size_t i = 0; i < map.size(); ++i)
          dominated += norm(map.images.row(i)) <= bound->evaluate(norm(map.sources.row(i)));
        run["domination"] = {{"statistical", true}, {"dominated", dominated}, {"points", map.size()}};
      }
      if (!jx.empty() || !jy.empty()) run["note"] = "duplicate points perturbed by 1e-12 jitter";
      any_violation = any_violation || !mono.ok() || cone_violations > 0;
      runs.push_back(std::move(run));
    }
  }
  r.exit_code = any_violation ? kViolation : kOk;
  r.summary = {{"scenario", name},
               {"subcommand", "verify-nd"},
               {"status", any_violation ? "violation" : "pass"},
               {"dim", d},
               {"runs", runs}};
  if (th) {
    r.summary["gate"] = gate.checks;
    r.summary["bound"] = bound_json(*bound);
  }
  write_summary(r, opt, pfx);
  return r;
}

// ---- bound-curve -----------------------------------------------------------------------

inline Report run_bound_curve(const json& s, const Options& opt, const std::string& default_name = "scenario") {
  validate_top_level(s);
  const std::string name = str_or(s, "name", default_name, "scenario");
  const std::string pfx = prefix(s, default_name);
  const int d0 = scenario_dim(s);
  const json& cj = section(s, "curve");
  check_keys(cj, {"x_min", "x_max", "points", "dims"}, "curve");
  const double x_min = num_or(cj, "x_min", 1e-3, "curve"), x_max = num_or(cj, "x_max", 1e6, "curve");
  const std::size_t pts = count(cj, "points", 200, "curve");
  if (!(x_min > 0.0 && x_max > x_min) || pts < 2) throw ConfigurationError("curve needs 0 < x_min < x_max and points >= 2");
  std::vector<int> dims;
  for (double v : num_list(cj, "dims", {static_cast<double>(d0)}, "curve")) {
    if (v < 1 || v != std::floor(v)) throw ConfigurationError("curve.dims must hold positive integers");
    dims.push_back(static_cast<int>(v));
  }
  const bool sweep = cj.contains("dims");

  Report r;
  json curves = json::array();
  json gate_checks = json::array();
  for (int d : dims) {
    const auto src = measure(s, "source", d), tgt = measure(s, "target", d);
    const TheoremSpec th = parse_theorem(s, d, src ? &*src : nullptr, tgt ? &*tgt : nullptr);
    if (src || tgt) {
      const Gate gate = run_gate(th, src ? &*src : nullptr, tgt ? &*tgt : nullptr, scenario_mc_n(s, 20000),
                                 scenario_seed(s, opt), tolerances(s));
      if (!gate.pass) return gate_failure("bound-curve", name, gate, opt, pfx);
      for (const auto& c : gate.checks) gate_checks.push_back(c);
    }
    const BoundPair b = make_bounds(th, opt.flavor, d);
    const std::string file = pfx + (sweep ? "_d" + std::to_string(d) : "") + "_bounds.csv";
    CsvWriter csv(opt.out_dir / file, {"x_norm", "bound_published", "bound_assembled", "theorem", "flavor_notes"});
    std::size_t degenerate_points = 0;
    const std::string theorem = std::string(to_string(th.theorem)) + (sweep ? "(d=" + std::to_string(d) + ")" : "");
    for (std::size_t i = 0; i < pts; ++i) {
      const double x = x_min * std::pow(x_max / x_min, static_cast<double>(i) / static_cast<double>(pts - 1));
      bool degenerate = false;
      const double bp = eval_or_nan(b.published, x, &degenerate);
      const double ba = eval_or_nan(b.assembled, x);
      degenerate_points += degenerate;
      std::string notes;
      if (degenerate) notes = "published-degenerate";
      else if (b.published && th.theorem == Theorem::ExponentialTarget &&
               exponential_published_term(*th.p.A, *th.p.V0, *th.p.c, d, x) < 0.0)
        notes = "published-clamped";
      csv.row({fmt(x), fmt(bp), fmt(ba), theorem, notes});
    }
    r.files.push_back(file);
    json cur = {{"dim", d}, {"file", file}, {"published_degenerate_points", degenerate_points}};
    json bj = json::array();
    for (const auto* g : {&b.published, &b.assembled})
      if (*g) bj.push_back(bound_json(**g));
    cur["bounds"] = bj;
    curves.push_back(std::move(cur));
  }
  r.summary = {{"scenario", name}, {"subcommand", "bound-curve"}, {"status", "pass"}, {"curves", curves}};
  if (!gate_checks.empty()) r.summary["gate"] = gate_checks;
  else r.summary["gate"] = "not applicable: no measures declared";
  write_summary(r, opt, pfx);
  return r;
}

// ---- concentration-check -----------------------------------------------------------------

inline Report run_concentration_check(const json& s, const Options& opt, const std::string& default_name = "scenario") {
  validate_top_level(s);
  const std::string name = str_or(s, "name", default_name, "scenario");
  const std::string pfx = prefix(s, default_name);
  const int d = scenario_dim(s);
  const auto tgt = measure(s, "target", d);
  if (!tgt || !tgt->model) throw ConfigurationError("concentration-check needs a target density");
  if (tgt->conc.kind == "none") throw ConfigurationError("target declares no concentration");
  const Tolerances tol = tolerances(s);
  const std::uint64_t seed = scenario_seed(s, opt);
  const json& tj = section(s, "tails");
  check_keys(tj, {"r", "tests"}, "tails");
  const auto rs = num_list(tj, "r", {0.5, 1.0, 2.0, 4.0, 8.0}, "tails");
  std::vector<std::string> tests;
  if (tj.contains("tests")) tests = tj.at("tests").get<std::vector<std::string>>();
  else tests = tgt->conc.kind == "polytail" ? std::vector<std::string>{"norm"} : std::vector<std::string>{"norm", "linear", "cone"};

  const std::size_t n = scenario_mc_n(s, 100000);
  const PointSet ys = sample(*tgt->model, n, seed).points;
  Point e1(static_cast<std::size_t>(d), 0.0);
  e1[0] = 1.0;

  Report r;
  json results = json::array();
  std::size_t failures = 0;
  for (const auto& test : tests) {
    std::vector<TailRow> rows;
    std::function<double(double)> bound;
    if (tgt->conc.kind == "polytail") {
      if (test != "norm") throw ConfigurationError("polytail targets support only the norm test");
      rows = empirical_norm_tail(ys, rs);
      const TailFunction psi = polytail_psi(*tgt->conc.M_tail, *tgt->conc.p, d);
      bound = [psi](double x) { return std::min(1.0, psi(x)); };
    } else {
      TestFunction f;
      if (test == "norm") f = NormTest{};
      else if (test == "linear") f = LinearTest{e1};
      else if (test == "cone") f = ConeTest{Point(static_cast<std::size_t>(d), 0.0), e1};
      else throw ConfigurationError("tails.tests entries must be norm, linear or cone");
      rows = empirical_tail(ys, f, rs);
      const ConcentrationProfile phi = *tgt->conc.profile;
      bound = [phi](double x) { return x >= phi.r0() ? phi(x) : 1.0; };
    }
    const std::string file = pfx + "_tails_" + test + ".csv";
    CsvWriter csv(opt.out_dir / file, {"r", "estimate", "stderr", "bound", "pass"});
    std::size_t fails = 0;
    for (const auto& row : rows) {
      const double b = bound(row.r);
      const bool pass = row.estimate <= b + tol.stat_sigmas * row.std_error;
      fails += !pass;
      csv.row({fmt(row.r), fmt(row.estimate), fmt(row.std_error), fmt(b), pass ? "1" : "0"});
    }
    failures += fails;
    r.files.push_back(file);
    results.push_back({{"test", test}, {"file", file}, {"failures", fails}});
  }
  r.exit_code = failures ? kViolation : kOk;
  r.summary = {{"scenario", name},
               {"subcommand", "concentration-check"},
               {"status", failures ? "violation" : "pass"},
               {"samples", n},
               {"seed", seed},
               {"stat_sigmas", tol.stat_sigmas},
               {"statistical", true},
               {"concentration", tgt->conc.as_json()},
               {"results", results}};
  write_summary(r, opt, pfx);
  return r;
}

// ---- ballprob-check ---------------------------------------------------------------------

// Infimum of the density over B(0, R) for the families where it is attained
// at a known boundary point.
inline double density_inf_ball(const DensityModel& m, double R) {
  const int d = m.dim();
  Point x(static_cast<std::size_t>(d), 0.0);
  if (std::holds_alternative<PolyVFamily>(m.family())) {
    x[0] = R;
  } else if (const auto* g = std::get_if<GaussianFamily>(&m.family())) {
    if (g->mean.norm() != 0.0 || (g->cov - g->cov(0, 0) * Eigen::MatrixXd::Identity(d, d)).norm() != 0.0)
      throw ConfigurationError("ballprob-check: poly bound needs an isotropic centred gaussian");
    x[0] = R;
  } else if (std::holds_alternative<LaplaceFamily>(m.family())) {
    for (double& v : x) v = R / std::sqrt(static_cast<double>(d));
  } else {
    throw ConfigurationError("ballprob-check: density infimum on B(0,7) unavailable for this family");
  }
  return m.density(x);
}

inline Report run_ballprob_check(const json& s, const Options& opt, const std::string& default_name = "scenario") {
  validate_top_level(s);
  const std::string name = str_or(s, "name", default_name, "scenario");
  const std::string pfx = prefix(s, default_name);
  const int d = scenario_dim(s);
  const auto src = measure(s, "source", d);
  if (!src || !src->model) throw ConfigurationError("ballprob-check needs a source density");
  const DensityModel& m = *src->model;
  const Tolerances tol = tolerances(s);
  const std::uint64_t seed = scenario_seed(s, opt);
  const json& bj = section(s, "ball");
  check_keys(bj, {"radii", "bounds", "method"}, "ball");
  const auto radii = num_list(bj, "radii", {0.5, 1.0, 2.0, 4.0, 8.0}, "ball");
  std::vector<std::string> kinds = {"loggrad", "poly"};
  if (bj.contains("bounds")) kinds = bj.at("bounds").get<std::vector<std::string>>();
  const std::string method = str_or(bj, "method", "mc", "ball");
  if (method != "mc" && method != "quadrature") throw ConfigurationError("ball.method must be mc or quadrature");
  if (method == "quadrature" && d > 3) throw ConfigurationError("quadrature ball probabilities need d <= 3");
  const std::size_t n = scenario_mc_n(s, 200000);
  const auto& p = m.params();

  Gate gate;
  for (const auto& k : kinds) {
    if (k == "loggrad") {
      if (!p.A) throw ConfigurationError("loggrad ball bound needs a declared A");
      gate_loggrad(gate, m, *p.A, p.V0.value_or(m.v_at_origin()), "source");
    } else if (k == "poly") {
      if (!p.L || !p.q) throw ConfigurationError("poly ball bound needs declared L and q");
      gate_poly(gate, m, *p.L, *p.q, true, "source");
    } else {
      throw ConfigurationError("ball.bounds entries must be loggrad or poly");
    }
  }
  if (!gate.pass) return gate_failure("ballprob-check", name, gate, opt, pfx);

  Report r;
  json results = json::array();
  std::size_t failures = 0;
  std::uint64_t stream = 0;
  for (const auto& k : kinds) {
    const std::string file = pfx + "_ball_" + k + ".csv";
    CsvWriter csv(opt.out_dir / file, {"x_norm", "analytic_lower", "mc_estimate", "mc_stderr", "pass"});
    std::size_t fails = 0;
    for (double rad : radii) {
      Point x(static_cast<std::size_t>(d), 0.0), u(static_cast<std::size_t>(d), 0.0);
      x[0] = rad;
      u[0] = 1.0;
      double lower;
      std::optional<BallSpec> ball;
      if (k == "loggrad") {
        const double V0 = p.V0.value_or(m.v_at_origin());
        lower = ball_lower_loggrad(*p.A, d, rad, muB0_lower(*p.A, V0, d));
        ball.emplace(x, 0.5);
      } else {
        lower = ball_lower_poly(*p.L, *p.q, d, x, u, density_inf_ball(m, 7.0));
        Point c = x;
        c[0] += 4.0 * rad;
        ball.emplace(c, 2.0 * rad);
      }
      double est, se;
      if (method == "mc") {
        const auto e = ball_prob_mc(m, *ball, n, derive_seed(seed, stream++));
        est = e.value;
        se = e.std_error;
      } else {
        est = ball_prob_quadrature(m, *ball);
        se = 0.0;
      }
      const bool pass = lower <= est + tol.stat_sigmas * se + (method == "mc" ? 0.0 : tol.numeric);
      fails += !pass;
      csv.row({fmt(rad), fmt(lower), fmt(est), fmt(se), pass ? "1" : "0"});
    }
    failures += fails;
    r.files.push_back(file);
    results.push_back({{"bound", k}, {"file", file}, {"failures", fails}});
  }
  r.exit_code = failures ? kViolation : kOk;
  r.summary = {{"scenario", name},
               {"subcommand", "ballprob-check"},
               {"status", failures ? "violation" : "pass"},
               {"method", method},
               {"samples", method == "mc" ? n : 0},
               {"seed", seed},
               {"gate", gate.checks},
               {"results", results}};
  write_summary(r, opt, pfx);
  return r;
}

// ---- dispatch ---------------------------------------------------------------------------------

inline json load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read scenario " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("scenario is not valid JSON: ") + e.what());
  }
}

inline Report run(const std::string& subcommand, const json& s, const Options& opt, const std::string& default_name) {
  std::filesystem::create_directories(opt.out_dir);
  if (subcommand == "verify-1d") return run_verify_1d(s, opt, default_name);
  if (subcommand == "verify-nd") return run_verify_nd(s, opt, default_name);
  if (subcommand == "bound-curve") return run_bound_curve(s, opt, default_name);
  if (subcommand == "concentration-check") return run_concentration_check(s, opt, default_name);
  if (subcommand == "ballprob-check") return run_ballprob_check(s, opt, default_name);
  throw ConfigurationError("unknown subcommand " + subcommand);
}

// Maps library errors to exit codes; configuration-type problems are 4,
// numerical failures during a run are 2.
inline Report run_guarded(const std::string& subcommand, const json& s, const Options& opt,
                          const std::string& default_name) {
  auto fail = [&](int code, const std::string& kind, const std::string& what) {
    Report r;
    r.exit_code = code;
    r.summary = {{"scenario", default_name}, {"subcommand", subcommand}, {"status", kind}, {"error", what}};
    return r;
  };
  try {
    return run(subcommand, s, opt, default_name);
  } catch (const json::exception& e) {
    return fail(kConfigError, "config-error", e.what());
  } catch (const ConfigurationError& e) {
    return fail(kConfigError, "config-error", e.what());
  } catch (const DomainError& e) {
    return fail(kConfigError, "config-error", e.what());
  } catch (const GridTruncation& e) {
    return fail(kConfigError, "config-error", e.what());
  } catch (const UnsupportedConstant& e) {
    return fail(kConfigError, "config-error", e.what());
  } catch (const Error& e) {
    return fail(kViolation, "run-error", e.what());
  }
}

}  // namespace otgrowth::cli
