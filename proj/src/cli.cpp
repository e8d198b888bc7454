#include "binreg/cli.hpp"

#include "binreg/confidence.hpp"
#include "binreg/estimators.hpp"
#include "binreg/experiments.hpp"
#include "binreg/gof.hpp"
#include "binreg/io.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <optional>
#include <set>

namespace binreg::cli {

namespace {

namespace fs = std::filesystem;

struct CommandInfo
{
  const char* name;
  const char* help;
};

const CommandInfo kCommands[] = {
  { "estimate-density", "adaptive design density estimate from a dataset" },
  { "estimate-regression", "adaptive regression estimate from a dataset" },
  { "test-simple", "test f = 1/2 on a dataset" },
  { "test-composite", "test membership of a smoother Besov ball on a dataset" },
  { "confset", "adaptive L2 confidence ball from a dataset" },
  { "calibrate", "Monte Carlo calibration of one tuning constant" },
  { "mc-coverage", "coverage and radius of confidence balls over replicates" },
  { "mc-rate", "estimation error across sample sizes" },
  { "mc-power", "rejection rate of a test under one model" },
};

void report_error(const char* kind, int code, const std::string& message)
{
  const Json line = { { "error", kind }, { "exit", code }, { "message", message } };
  std::cerr << line.dump() << std::endl;
}

void progress(const std::string& message)
{
  std::cerr << "binreg: " << message << std::endl;
}

// Reads typed values from one config object, records them (with defaults)
// in `resolved`, and rejects keys nobody asked for.
class Section
{
public:
  Section(const Json& j, std::string where)
    : j_(j.is_null() ? Json::object() : j)
    , where_(std::move(where))
  {
    if (!j_.is_object())
      throw ValidationError(where_ + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const Json& raw(const char* key)
  {
    used_.insert(key);
    static const Json null;
    return j_.contains(key) ? j_.at(key) : null;
  }

  double num(const char* key, std::optional<double> fallback = std::nullopt)
  {
    const Json& v = raw(key);
    double out = 0.0;
    if (v.is_null()) {
      if (!fallback)
        throw ValidationError(path(key) + " is required");
      out = *fallback;
    } else if (!v.is_number()) {
      throw ValidationError(path(key) + " must be a number");
    } else {
      out = v.get<double>();
    }
    if (!std::isfinite(out))
      throw ValidationError(path(key) + " must be finite");
    resolved[key] = out;
    return out;
  }

  long long integer(const char* key, std::optional<long long> fallback = std::nullopt)
  {
    const Json& v = raw(key);
    long long out = 0;
    if (v.is_null()) {
      if (!fallback)
        throw ValidationError(path(key) + " is required");
      out = *fallback;
    } else if (!v.is_number_integer()) {
      throw ValidationError(path(key) + " must be an integer");
    } else {
      out = v.get<long long>();
    }
    resolved[key] = out;
    return out;
  }

  std::uint64_t u64(const char* key, std::uint64_t fallback)
  {
    const Json& v = raw(key);
    std::uint64_t out = fallback;
    if (!v.is_null()) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ValidationError(path(key) + " must be a nonnegative integer");
      out = v.get<std::uint64_t>();
    }
    resolved[key] = out;
    return out;
  }

  bool flag(const char* key, bool fallback)
  {
    const Json& v = raw(key);
    if (!v.is_null() && !v.is_boolean())
      throw ValidationError(path(key) + " must be a boolean");
    const bool out = v.is_null() ? fallback : v.get<bool>();
    resolved[key] = out;
    return out;
  }

  std::string str(const char* key, std::optional<std::string> fallback = std::nullopt)
  {
    const Json& v = raw(key);
    std::string out;
    if (v.is_null()) {
      if (!fallback)
        throw ValidationError(path(key) + " is required");
      out = *fallback;
    } else if (!v.is_string()) {
      throw ValidationError(path(key) + " must be a string");
    } else {
      out = v.get<std::string>();
    }
    resolved[key] = out;
    return out;
  }

  std::vector<double> numbers(const char* key, std::optional<std::vector<double>> fallback)
  {
    const Json& v = raw(key);
    std::vector<double> out;
    if (v.is_null()) {
      if (!fallback)
        throw ValidationError(path(key) + " is required");
      out = *fallback;
    } else {
      if (!v.is_array() || v.empty())
        throw ValidationError(path(key) + " must be a nonempty array");
      for (const auto& e : v) {
        if (!e.is_number())
          throw ValidationError(path(key) + " must hold numbers");
        out.push_back(e.get<double>());
      }
    }
    resolved[key] = out;
    return out;
  }

  std::vector<Eigen::Index> sizes(const char* key)
  {
    const Json& v = raw(key);
    if (!v.is_array() || v.empty())
      throw ValidationError(path(key) + " must be a nonempty array of sample sizes");
    std::vector<Eigen::Index> out;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() < 1)
        throw ValidationError(path(key) + " must hold positive integers");
      out.push_back(e.get<Eigen::Index>());
    }
    resolved[key] = v;
    return out;
  }

  void finish() const
  {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k))
        throw ValidationError("unknown key '" + k + "' in " + where_);
  }

  Json resolved = Json::object();

private:
  std::string path(const char* key) const { return where_ + "." + key; }

  Json j_;
  std::string where_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& message)
{
  if (!ok)
    throw ValidationError(message);
}

struct Context
{
  std::string command;
  fs::path base_dir;
  fs::path out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  Json resolved = Json::object();
  Provenance prov;
};

using Action = std::function<Json(Context&)>;

ClassParams read_params(Section& top)
{
  Section s(top.raw("params"), "params");
  ClassParams p;
  p.beta_min = s.num("beta_min", p.beta_min);
  p.beta_max = s.num("beta_max", p.beta_max);
  p.gamma_min = s.num("gamma_min", p.gamma_min);
  p.gamma_max = s.num("gamma_max", p.gamma_max);
  p.M = s.num("M", p.M);
  p.M_prime = s.num("M_prime", p.M_prime);
  p.B_L = s.num("B_L", p.B_L);
  p.B_U = s.num("B_U", p.B_U);
  s.finish();
  top.resolved["params"] = s.resolved;
  p.validate();
  return p;
}

WaveletBasis read_basis(Section& top)
{
  Section s(top.raw("basis"), "basis");
  const std::string family = s.str("family", std::string("haar"));
  require(family == "haar" || family == "daubechies", "basis.family must be haar or daubechies");
  const long long reg = s.integer("regularity", family == "haar" ? 1 : 6);
  const long long res = s.integer("resolution", 12);
  s.finish();
  top.resolved["basis"] = s.resolved;
  require(reg >= 1 && reg <= kMaxDaubechiesOrder, "basis.regularity out of range");
  require(res >= 2 && res <= 20, "basis.resolution must be in [2, 20]");
  require(family != "haar" || reg == 1, "basis.regularity must be 1 for haar");
  return WaveletBasis::build(family == "haar" ? Family::haar : Family::daubechies,
                             static_cast<int>(reg), 1, static_cast<int>(res));
}

WaveletBasis with_dim(const WaveletBasis& b, int dim)
{
  return WaveletBasis::build(b.family(), b.regularity(), dim, b.resolution());
}

struct Constants
{
  double lepski_density = 1.0;
  double lepski_regression = 1.0;
  double simple_C = 1.0;
  double zeta = 1.0;
  double C_star = 0.0;
  double C1 = 1.0;
  double C2 = 1.0;
  double slack = 1.0;
  double M_star = 1.0;
  double z_alpha = 0.0;
  double D = 1.0;
};

// Explicit constants win over calibration files; later files win over earlier ones.
Constants read_constants(Section& top, const fs::path& base_dir)
{
  std::map<std::string, double> calibrated;
  const Json& cal = top.raw("calibration");
  Json cal_paths = Json::array();
  if (!cal.is_null()) {
    const Json list = cal.is_array() ? cal : Json::array({ cal });
    for (const auto& p : list) {
      require(p.is_string(), "calibration must be a path or a list of paths");
      fs::path path(p.get<std::string>());
      if (path.is_relative())
        path = base_dir / path;
      for (const auto& [k, v] : read_calibration_constants(path))
        calibrated[k] = v;
      cal_paths.push_back(p);
    }
    top.resolved["calibration"] = cal_paths;
  }
  Section s(top.raw("constants"), "constants");
  Constants c;
  auto get = [&](const char* key, double def) {
    const auto it = calibrated.find(key);
    return s.num(key, it != calibrated.end() ? it->second : def);
  };
  c.lepski_density = get("lepski_density", c.lepski_density);
  c.lepski_regression = get("lepski_regression", c.lepski_regression);
  c.simple_C = get("simple_C", c.simple_C);
  c.zeta = get("zeta", c.zeta);
  c.C_star = get("C_star", c.C_star);
  c.C1 = get("C1", c.C1);
  c.C2 = get("C2", c.C2);
  c.slack = get("slack", c.slack);
  c.M_star = get("M_star", c.M_star);
  c.z_alpha = get("z_alpha", c.z_alpha);
  c.D = get("D", c.D);
  s.finish();
  for (const auto& [k, v] : calibrated)
    require(s.resolved.contains(k), "calibration file sets unknown constant " + k);
  for (const auto& [k, v] : s.resolved.items())
    require(v.get<double>() >= 0.0, "constants." + k + " must be nonnegative");
  top.resolved["constants"] = s.resolved;
  return c;
}

double read_alpha(Section& top)
{
  const double a = top.num("alpha", 0.1);
  require(a > 0.0 && a < 1.0, "alpha must lie in (0, 1)");
  return a;
}

Dataset read_data(Section& top, const Context& ctx)
{
  fs::path path(top.str("dataset"));
  if (path.is_relative())
    path = ctx.base_dir / path;
  return read_dataset_csv(path);
}

ModelSpec read_model(const Json& j, const std::string& where, const Context& ctx, Json& resolved)
{
  try {
    resolved = resolve_model_json(j);
    return model_from_json(j, ctx.base_dir);
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

std::vector<ModelSpec> read_panel(Section& top, const Context& ctx)
{
  const Json& p = top.raw("panel");
  std::vector<ModelSpec> out;
  Json resolved = Json::array();
  if (p.is_null()) {
    Json one;
    out.push_back(read_model(top.raw("model"), "model", ctx, one));
    top.resolved["model"] = one;
    return out;
  }
  require(p.is_array() && !p.empty(), "panel must be a nonempty array of models");
  require(!top.has("model"), "give either model or panel, not both");
  for (std::size_t i = 0; i < p.size(); ++i) {
    Json one;
    out.push_back(read_model(p[i], "panel[" + std::to_string(i) + "]", ctx, one));
    resolved.push_back(one);
  }
  top.resolved["panel"] = resolved;
  return out;
}

SimpleTestConfig read_simple(Section& s, double alpha, const Constants& c)
{
  SimpleTestConfig cfg;
  cfg.beta = s.num("beta", cfg.beta);
  cfg.gamma = s.num("gamma", cfg.gamma);
  cfg.alpha = alpha;
  cfg.C = c.simple_C;
  cfg.validate();
  return cfg;
}

CompositeTestConfig read_composite(Section& s, double alpha, const Constants& c,
                                   const ClassParams& p)
{
  CompositeTestConfig cfg;
  cfg.beta1 = s.num("beta1", cfg.beta1);
  cfg.beta2 = s.num("beta2", cfg.beta2);
  cfg.M = s.num("M", p.M);
  cfg.gamma_min = s.num("gamma_min", p.gamma_min);
  cfg.B_L_prime = s.num("B_L_prime", 0.5 * p.B_L);
  cfg.alpha = alpha;
  cfg.zeta = c.zeta;
  cfg.C_star = c.C_star;
  cfg.validate();
  return cfg;
}

// "test": {"kind": ..., ...}; kind may be implied by the command.
TestSetup read_test(Section& top, std::optional<TestKind> implied, double alpha,
                    const Constants& c, const ClassParams& p)
{
  Section s(top.raw("test"), "test");
  TestSetup setup;
  std::string kind;
  if (implied) {
    kind = *implied == TestKind::simple ? "simple" : "composite";
    if (s.has("kind"))
      require(s.str("kind") == kind, "test.kind contradicts the command");
  } else {
    kind = s.str("kind");
  }
  require(kind == "simple" || kind == "composite", "test.kind must be simple or composite");
  setup.kind = kind == "simple" ? TestKind::simple : TestKind::composite;
  if (setup.kind == TestKind::simple)
    setup.simple = read_simple(s, alpha, c);
  else
    setup.composite = read_composite(s, alpha, c, p);
  setup.params = p;
  setup.density_lepski = c.lepski_density;
  s.finish();
  top.resolved["test"] = s.resolved;
  top.resolved["test"]["kind"] = kind;
  return setup;
}

ConfidenceConfig confidence_config(const ClassParams& p, double alpha, const Constants& c)
{
  ConfidenceConfig cfg;
  cfg.params = p;
  cfg.alpha = alpha;
  cfg.z_alpha = c.z_alpha;
  cfg.C1 = c.C1;
  cfg.C2 = c.C2;
  cfg.slack_const = c.slack;
  cfg.M_star = c.M_star;
  cfg.zeta = c.zeta;
  cfg.C_star = c.C_star;
  cfg.lepski_density = c.lepski_density;
  cfg.lepski_regression = c.lepski_regression;
  return cfg;
}

int check_dim(const std::vector<ModelSpec>& models)
{
  const int d = models.front().dim;
  for (const auto& m : models)
    require(m.dim == d, "models in a panel must share their dimension");
  return d;
}

Eigen::Index positive(long long v, const char* what)
{
  require(v >= 1, std::string(what) + " must be positive");
  return static_cast<Eigen::Index>(v);
}

fs::path out_file(const Context& ctx, const std::string& name)
{
  return ctx.out_dir / name;
}

Json density_sidecar(const AdaptiveDensityEstimate& g, int resolution)
{
  return { { "selected_level", g.selected_level },
           { "levels", { g.levels.lo, g.levels.hi } },
           { "lepski_const", g.lepski_const },
           { "n", g.n },
           { "B_L", g.B_L },
           { "B_U", g.B_U },
           { "clamp", { g.lower(), g.upper() } },
           { "grid_resolution", resolution },
           { "coefficients", to_json(g.coeffs) } };
}

Json regression_sidecar(const AdaptiveRegressionEstimate& f, int resolution)
{
  return { { "selected_level", f.selected_level },
           { "levels", { f.levels.lo, f.levels.hi } },
           { "lepski_const", f.lepski_const },
           { "n", f.n },
           { "clamp", { f.lower(), f.upper() } },
           { "grid_resolution", resolution },
           { "coefficients", to_json(f.coeffs) } };
}

// Each prepare_* validates everything it needs and returns the action that
// runs the pipeline and writes the outputs.

Action prepare_estimate_density(Section& top, Context& ctx)
{
  const Dataset data = read_data(top, ctx);
  const ClassParams p = read_params(top);
  const WaveletBasis basis = with_dim(read_basis(top), data.dim());
  const Constants c = read_constants(top, ctx.base_dir);
  const int res = static_cast<int>(top.integer("grid_resolution", -1));
  require(res == -1 || (res >= 1 && res * data.dim() <= 24), "grid_resolution out of range");
  require(data.size() >= 1, "dataset is empty");
  return [=](Context& ctx) {
    const AdaptiveDensityEstimate g = estimate_density(data.x, p, basis, c.lepski_density);
    const int R = res > 0 ? res : default_grid_resolution(basis, g.levels);
    write_grid_csv(out_file(ctx, "density.csv"), g.materialize(basis, R), &ctx.prov);
    return Json{ { "density", density_sidecar(g, R) } };
  };
}

Action prepare_estimate_regression(Section& top, Context& ctx)
{
  const Dataset data = read_data(top, ctx);
  const ClassParams p = read_params(top);
  p.require_estimation();
  const WaveletBasis basis = with_dim(read_basis(top), data.dim());
  const Constants c = read_constants(top, ctx.base_dir);
  const int res = static_cast<int>(top.integer("grid_resolution", -1));
  require(res == -1 || (res >= 1 && res * data.dim() <= 24), "grid_resolution out of range");
  std::optional<std::uint64_t> split;
  if (top.has("split_seed"))
    split = top.u64("split_seed", 0);
  require(data.size() >= 2, "regression needs at least two observations");
  return [=](Context& ctx) {
    const RegressionFit fit =
      estimate_regression(data, p, basis, c.lepski_regression, c.lepski_density, split);
    const int R = res > 0 ? res : default_grid_resolution(basis, fit.regression.levels);
    write_grid_csv(out_file(ctx, "regression.csv"), fit.regression.materialize(basis, R),
                   &ctx.prov);
    write_grid_csv(out_file(ctx, "density.csv"), fit.density.materialize(basis, R), &ctx.prov);
    Json j = { { "regression", regression_sidecar(fit.regression, R) },
               { "density", density_sidecar(fit.density, R) } };
    j["split_seed"] = split ? Json(*split) : Json(nullptr);
    return j;
  };
}

Action prepare_test(Section& top, Context& ctx, TestKind kind)
{
  const Dataset data = read_data(top, ctx);
  const ClassParams p = read_params(top);
  const WaveletBasis basis = with_dim(read_basis(top), data.dim());
  const Constants c = read_constants(top, ctx.base_dir);
  const double alpha = read_alpha(top);
  const TestSetup setup = read_test(top, kind, alpha, c, p);
  require(data.size() >= (kind == TestKind::simple ? 2 : 4), "dataset too small for the test");
  return [=](Context&) {
    const TestOutcome out =
      kind == TestKind::simple
        ? simple_null_test(data, setup.simple, basis)
        : composite_test(data, setup.composite, p, c.lepski_density, basis);
    for (const auto& w : out.warnings)
      progress("warning: " + w);
    return Json{ { "test", to_json(out) } };
  };
}

Action prepare_confset(Section& top, Context& ctx)
{
  const Dataset data = read_data(top, ctx);
  const ClassParams p = read_params(top);
  const WaveletBasis basis = with_dim(read_basis(top), data.dim());
  const Constants c = read_constants(top, ctx.base_dir);
  ConfidenceConfig cfg = confidence_config(p, read_alpha(top), c);
  cfg.floor_U = top.flag("floor_U", false);
  cfg.grid_resolution = static_cast<int>(top.integer("grid_resolution", -1));
  require(cfg.grid_resolution == -1 ||
            (cfg.grid_resolution >= 1 && cfg.grid_resolution * data.dim() <= 24),
          "grid_resolution out of range");
  const bool write_center = top.flag("write_center", true);
  cfg.validate();
  require(data.size() >= 6, "confidence sets need at least six observations");
  return [=](Context& ctx) {
    const ConfidenceBall ball = build_confidence_ball(data, cfg, basis);
    if (write_center)
      write_grid_csv(out_file(ctx, "center.csv"), ball.center, &ctx.prov);
    Json trace = Json::array();
    for (const auto& t : ball.selection.trace)
      trace.push_back(to_json(t));
    const double r2 = radius_upper_bound(ball);
    return Json{ { "ball",
                   { { "beta_hat", ball.beta_hat },
                     { "beta_grid", beta_grid(p.beta_min, p.beta_max).levels },
                     { "U_hat", ball.U_hat },
                     { "deterministic_slack", ball.deterministic_slack },
                     { "z_alpha", ball.z_alpha },
                     { "C1", ball.tau_const_C1 },
                     { "C2", ball.tau_const_C2 },
                     { "j1", ball.j1 },
                     { "n_part", ball.n },
                     { "regression_level", ball.regression_level },
                     { "clamp_violations", ball.clamp_violations },
                     { "density_level", ball.density_level },
                     { "radius_squared", r2 },
                     { "radius", std::sqrt(r2) },
                     { "center_resolution", ball.center.resolution },
                     { "selection", { { "index", ball.selection.index },
                                      { "test_alpha", ball.selection.test_alpha },
                                      { "tests", trace } } } } } };
  };
}

Json report_result(const Context& ctx, const ExperimentReport& report)
{
  write_records_csv(out_file(ctx, "records.csv"), report, &ctx.prov);
  return Json{ { "report", to_json(report) } };
}

Action prepare_mc_coverage(Section& top, Context& ctx)
{
  const ClassParams p = read_params(top);
  const WaveletBasis base = read_basis(top);
  const Constants c = read_constants(top, ctx.base_dir);
  ConfidenceConfig cfg = confidence_config(p, read_alpha(top), c);
  cfg.floor_U = top.flag("floor_U", false);
  cfg.grid_resolution = static_cast<int>(top.integer("grid_resolution", 12));
  cfg.validate();
  Json model_json;
  const ModelSpec model = read_model(top.raw("model"), "model", ctx, model_json);
  top.resolved["model"] = model_json;
  const WaveletBasis basis = with_dim(base, model.dim);
  require(cfg.grid_resolution >= 1 && cfg.grid_resolution * model.dim <= 24,
          "grid_resolution out of range");
  const Eigen::Index reps = positive(top.integer("reps", 100), "reps");
  std::vector<Eigen::Index> ns;
  if (top.has("ns")) {
    require(!top.has("n"), "give either n or ns");
    ns = top.sizes("ns");
    require(ns.size() >= 3, "ns needs at least three sample sizes");
  } else {
    ns = { positive(top.integer("n"), "n") };
  }
  for (auto n : ns)
    require(n >= 6, "coverage runs need n >= 6");
  return [=](Context& ctx) {
    progress("coverage: " + std::to_string(ns.size()) + " sample size(s), " +
             std::to_string(reps) + " replicates each");
    const ExperimentReport r =
      ns.size() == 1
        ? mc_coverage(model, ns[0], static_cast<int>(reps), cfg, ctx.seed, basis, ctx.threads)
        : mc_radius_rate(model, ns, static_cast<int>(reps), cfg, ctx.seed, basis, ctx.threads);
    return report_result(ctx, r);
  };
}

Action prepare_mc_rate(Section& top, Context& ctx)
{
  const ClassParams p = read_params(top);
  const WaveletBasis base = read_basis(top);
  const Constants c = read_constants(top, ctx.base_dir);
  RateSetup setup;
  const std::string target = top.str("target", std::string("density"));
  require(target == "density" || target == "regression", "target must be density or regression");
  setup.target = target == "density" ? RateTarget::density : RateTarget::regression;
  setup.params = p;
  setup.lepski_density = c.lepski_density;
  setup.lepski_regression = c.lepski_regression;
  setup.eval_resolution = static_cast<int>(top.integer("eval_resolution", 12));
  if (setup.target == RateTarget::regression)
    p.require_estimation();
  Json model_json;
  const ModelSpec model = read_model(top.raw("model"), "model", ctx, model_json);
  top.resolved["model"] = model_json;
  const WaveletBasis basis = with_dim(base, model.dim);
  require(setup.eval_resolution >= 1 && setup.eval_resolution * model.dim <= 24,
          "eval_resolution out of range");
  const std::vector<Eigen::Index> ns = top.sizes("ns");
  for (auto n : ns)
    require(n >= 4, "rate experiments need n >= 4");
  const Eigen::Index reps = positive(top.integer("reps", 100), "reps");
  return [=](Context& ctx) {
    progress(target + " rate: " + std::to_string(ns.size()) + " sample size(s)");
    return report_result(
      ctx, mc_rate(setup, model, ns, static_cast<int>(reps), ctx.seed, basis, ctx.threads));
  };
}

Action prepare_mc_power(Section& top, Context& ctx)
{
  const ClassParams p = read_params(top);
  const WaveletBasis base = read_basis(top);
  const Constants c = read_constants(top, ctx.base_dir);
  const double alpha = read_alpha(top);
  const TestSetup setup = read_test(top, std::nullopt, alpha, c, p);
  const Eigen::Index n = positive(top.integer("n"), "n");
  const Eigen::Index reps = positive(top.integer("reps", 100), "reps");
  require(n >= 4, "n must be at least 4");

  if (top.has("alternative")) {
    require(!top.has("model"), "give either model or alternative");
    Section a(top.raw("alternative"), "alternative");
    const double D = a.num("D", c.D);
    const long long dim = a.integer("dim", 1);
    const long long res = a.integer("resolution", 12);
    a.finish();
    top.resolved["alternative"] = a.resolved;
    require(D > 0.0, "alternative.D must be positive");
    require(dim >= 1 && dim <= kMaxDim, "alternative.dim must be in [1, 3]");
    require(res >= 1 && res * dim <= 24, "alternative.resolution out of range");
    const WaveletBasis basis = with_dim(base, static_cast<int>(dim));
    return [=](Context& ctx) {
      progress("power against bump alternatives");
      const ModelFactory alt =
        setup.kind == TestKind::simple
          ? simple_bump_alternatives(setup.simple, n, D, basis, static_cast<int>(res))
          : composite_bump_alternatives(setup.composite, n / 2, D, basis, static_cast<int>(res));
      return report_result(ctx, mc_rejection_rate(setup, alt, n, static_cast<int>(reps), ctx.seed,
                                                   basis, ctx.threads));
    };
  }
  Json model_json;
  const ModelSpec model = read_model(top.raw("model"), "model", ctx, model_json);
  top.resolved["model"] = model_json;
  const WaveletBasis basis = with_dim(base, model.dim);
  return [=](Context& ctx) {
    progress("rejection rate on a fixed model");
    return report_result(ctx, mc_rejection_rate(setup, model, n, static_cast<int>(reps), ctx.seed,
                                                basis, ctx.threads));
  };
}

Action prepare_calibrate(Section& top, Context& ctx)
{
  const ClassParams p = read_params(top);
  const WaveletBasis base = read_basis(top);
  const Constants c = read_constants(top, ctx.base_dir);
  const double alpha = read_alpha(top);
  const std::string target = top.str("target");
  const Eigen::Index n = positive(top.integer("n"), "n");
  const int reps = static_cast<int>(positive(top.integer("reps", 200), "reps"));

  std::function<CalibrationResult(const Context&)> job;
  if (target == "simple" || target == "composite") {
    const TestSetup setup = read_test(
      top, target == "simple" ? TestKind::simple : TestKind::composite, alpha, c, p);
    const std::vector<ModelSpec> panel = read_panel(top, ctx);
    const WaveletBasis basis = with_dim(base, check_dim(panel));
    job = [=](const Context& ctx) {
      return setup.kind == TestKind::simple
               ? calibrate_simple(panel, n, setup.simple, reps, ctx.seed, basis, ctx.threads)
               : calibrate_composite(panel, n, setup, reps, ctx.seed, basis, ctx.threads);
    };
  } else if (target == "separation") {
    const TestSetup setup = read_test(top, std::nullopt, alpha, c, p);
    const double power = top.num("power", 0.9);
    const std::vector<double> range = top.numbers("D_range", std::vector<double>{ 0.01, 100.0 });
    const long long dim = top.integer("dim", 1);
    require(power > 0.0 && power < 1.0, "power must lie in (0, 1)");
    require(range.size() == 2 && range[0] > 0.0 && range[1] > range[0],
            "D_range must be [lo, hi] with 0 < lo < hi");
    require(dim >= 1 && dim <= kMaxDim, "dim must be in [1, 3]");
    const WaveletBasis basis = with_dim(base, static_cast<int>(dim));
    job = [=](const Context& ctx) {
      return calibrate_separation(setup, n, power, reps, ctx.seed, basis, range[0], range[1],
                                  ctx.threads);
    };
  } else if (target == "lepski-density" || target == "lepski-regression") {
    RateSetup setup;
    setup.params = p;
    setup.lepski_density = c.lepski_density;
    setup.lepski_regression = c.lepski_regression;
    setup.eval_resolution = static_cast<int>(top.integer("eval_resolution", 12));
    const RateTarget rt =
      target == "lepski-density" ? RateTarget::density : RateTarget::regression;
    if (rt == RateTarget::regression)
      p.require_estimation();
    std::vector<double> ladder;
    for (int k = -4; k <= 4; ++k)
      ladder.push_back(std::exp2(0.5 * k));
    const std::vector<double> grid = top.numbers("grid", ladder);
    const double agreement = top.num("agreement", 0.9);
    require(agreement > 0.0 && agreement <= 1.0, "agreement must lie in (0, 1]");
    for (double g : grid)
      require(g >= 0.0, "grid constants must be nonnegative");
    const std::vector<ModelSpec> panel = read_panel(top, ctx);
    const WaveletBasis basis = with_dim(base, check_dim(panel));
    require(setup.eval_resolution - 2 >= basis.base_level() &&
              setup.eval_resolution * basis.dim() <= 24,
            "eval_resolution out of range");
    job = [=](const Context& ctx) {
      return calibrate_lepski(rt, panel, n, setup, grid, agreement, reps, ctx.seed, basis,
                              ctx.threads);
    };
  } else if (target == "confidence") {
    ConfidenceConfig cfg = confidence_config(p, alpha, c);
    cfg.floor_U = top.flag("floor_U", false);
    cfg.grid_resolution = static_cast<int>(top.integer("grid_resolution", 12));
    cfg.validate();
    const int halvings = static_cast<int>(top.integer("max_halvings", 12));
    require(halvings >= 0 && halvings <= 60, "max_halvings must be in [0, 60]");
    require(n >= 6, "confidence calibration needs n >= 6");
    const std::vector<ModelSpec> panel = read_panel(top, ctx);
    const WaveletBasis basis = with_dim(base, check_dim(panel));
    job = [=](const Context& ctx) {
      return calibrate_confidence(panel, n, cfg, reps, ctx.seed, basis, halvings, ctx.threads);
    };
  } else {
    throw ValidationError("target must be one of simple, composite, separation, lepski-density, "
                          "lepski-regression, confidence");
  }
  return [=](Context& ctx) {
    progress("calibrating " + target);
    const CalibrationResult r = job(ctx);
    Json cal = to_json(r);
    cal["config_hash"] = ctx.prov.config_hash;
    write_text_file(out_file(ctx, "calibration.json"), cal.dump(2) + "\n");
    return Json{ { "calibration", to_json(r) } };
  };
}

Action prepare(Section& top, Context& ctx)
{
  const std::string& cmd = ctx.command;
  if (cmd == "estimate-density")
    return prepare_estimate_density(top, ctx);
  if (cmd == "estimate-regression")
    return prepare_estimate_regression(top, ctx);
  if (cmd == "test-simple")
    return prepare_test(top, ctx, TestKind::simple);
  if (cmd == "test-composite")
    return prepare_test(top, ctx, TestKind::composite);
  if (cmd == "confset")
    return prepare_confset(top, ctx);
  if (cmd == "calibrate")
    return prepare_calibrate(top, ctx);
  if (cmd == "mc-coverage")
    return prepare_mc_coverage(top, ctx);
  if (cmd == "mc-rate")
    return prepare_mc_rate(top, ctx);
  if (cmd == "mc-power")
    return prepare_mc_power(top, ctx);
  throw ValidationError("unknown command " + cmd);
}

struct Flags
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
};

} // namespace

int run(const std::vector<std::string>& args)
{
  CLI::App app{ "Adaptive inference for binary regression with wavelets", "binreg" };
  app.require_subcommand(1);
  Flags flags;
  std::string command;
  for (const auto& [name, help] : kCommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "JSON configuration file")->required();
    sub->add_option("--seed", flags.seed, "master seed (overrides the config)");
    sub->add_option("--out", flags.out, "output directory (overrides the config)");
    sub->add_option("--threads", flags.threads, "worker threads for replicates (0 = all cores)");
    sub->callback([&command, name] { command = name; });
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error("usage", kExitValidation, e.what());
    return kExitValidation;
  }

  Context ctx;
  ctx.command = command;
  Action action;
  try {
    const fs::path config_path(flags.config);
    Json raw;
    try {
      raw = Json::parse(read_text_file(config_path));
    } catch (const Json::parse_error& e) {
      throw ValidationError(config_path.string() + ": " + e.what());
    }
    ctx.base_dir = config_path.parent_path();
    Section top(raw, "config");
    if (top.has("command"))
      require(top.str("command") == command, "config command does not match " + command);
    top.resolved.erase("command");
    ctx.seed = flags.seed ? *flags.seed : top.u64("seed", 0);
    top.raw("seed");
    top.resolved.erase("seed");
    const std::string out_cfg = top.has("out") ? top.str("out") : std::string("binreg-out");
    top.resolved.erase("out");
    ctx.out_dir = flags.out ? fs::path(*flags.out)
                            : (fs::path(out_cfg).is_relative() ? ctx.base_dir / out_cfg
                                                               : fs::path(out_cfg));
    const long long threads = flags.threads ? *flags.threads : top.integer("threads", 0);
    top.resolved.erase("threads");
    require(threads >= 0, "threads must be nonnegative");
    ctx.threads = static_cast<int>(threads);
    action = prepare(top, ctx);
    top.finish();
    ctx.resolved = top.resolved;
    ctx.resolved["command"] = command;
    ctx.prov = { config_hash(ctx.resolved), ctx.seed };
  } catch (const ValidationError& e) {
    report_error("validation", kExitValidation, e.what());
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    report_error("validation", kExitValidation, e.what());
    return kExitValidation;
  } catch (const std::out_of_range& e) {
    report_error("validation", kExitValidation, e.what());
    return kExitValidation;
  } catch (const Json::exception& e) {
    report_error("validation", kExitValidation, e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    report_error("runtime", kExitRuntime, e.what());
    return kExitRuntime;
  }

  try {
    fs::create_directories(ctx.out_dir);
    const Json echo = { { "config", ctx.resolved },
                        { "config_hash", ctx.prov.config_hash },
                        { "seed", ctx.seed } };
    write_text_file(out_file(ctx, "config.resolved.json"), echo.dump(2) + "\n");
    Json summary = action(ctx);
    summary["command"] = command;
    summary["config_hash"] = ctx.prov.config_hash;
    summary["seed"] = ctx.seed;
    write_text_file(out_file(ctx, "summary.json"), summary.dump(2) + "\n");
    progress("wrote " + out_file(ctx, "summary.json").string());
  } catch (const CalibrationError& e) {
    report_error("calibration", kExitRuntime, e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    report_error("runtime", kExitRuntime, e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv)
{
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i)
    args.emplace_back(argv[i]);
  return run(args);
}

} // namespace binreg::cli
