#include "binreg/experiments.hpp"

#include "binreg/coeff_tree.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace binreg {

Eigen::MatrixXd run_replicates(int reps, std::uint64_t seed, int threads, int columns,
                               const std::function<void(int, Rng&, Eigen::Ref<Eigen::RowVectorXd>)>& fn)
{
  if (reps < 0 || columns < 0)
    throw std::invalid_argument("replicate count and width must be nonnegative");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(reps, columns);
  if (threads <= 0)
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::max(1, std::min(threads, reps));

  std::atomic<int> next{ 0 };
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    Eigen::RowVectorXd row(columns);
    for (int rep = next++; rep < reps; rep = next++) {
      try {
        Rng rng(seed, static_cast<std::uint64_t>(rep));
        row.setZero();
        fn(rep, rng, row);
        out.row(rep) = row;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
        next = reps;
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(worker);
    for (auto& th : pool)
      th.join();
  }
  if (failure)
    std::rethrow_exception(failure);
  return out;
}

Summary summarize_mean(const std::string& name, const Eigen::VectorXd& x)
{
  Summary s{ name, 0.0, 0.0 };
  const double R = static_cast<double>(x.size());
  if (x.size() == 0)
    return s;
  s.value = x.mean();
  if (x.size() > 1)
    s.se = std::sqrt((x.array() - s.value).square().sum() / (R - 1.0) / R);
  return s;
}

Summary summarize_median(const std::string& name, const Eigen::VectorXd& x)
{
  Summary s{ name, 0.0, 0.0 };
  if (x.size() == 0)
    return s;
  std::vector<double> v(x.data(), x.data() + x.size());
  std::sort(v.begin(), v.end());
  const std::size_t R = v.size();
  s.value = R % 2 ? v[R / 2] : 0.5 * (v[R / 2 - 1] + v[R / 2]);
  const double half = 0.98 * std::sqrt(static_cast<double>(R));
  const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(R / 2.0 - half)));
  const auto hi = static_cast<std::size_t>(std::min(R - 1.0, std::ceil(R / 2.0 + half)));
  s.se = (v[hi] - v[lo]) / (2.0 * 1.96);
  return s;
}

SlopeFit rate_slope(const std::vector<double>& ns, const std::vector<double>& values,
                    const std::vector<double>& value_ses)
{
  if (ns.size() != values.size() || (!value_ses.empty() && value_ses.size() != ns.size()))
    throw std::invalid_argument("rate_slope: inputs differ in length");
  std::vector<double> distinct = ns;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3)
    throw std::invalid_argument("rate_slope needs at least three distinct n");

  const std::size_t m = ns.size();
  Eigen::VectorXd lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(ns[i] > 0.0) || !(values[i] > 0.0))
      throw std::invalid_argument("rate_slope needs positive n and values");
    lx[i] = std::log(ns[i]);
    ly[i] = std::log(values[i]);
  }
  const double mx = lx.mean();
  const Eigen::VectorXd cx = lx.array() - mx;
  const double sxx = cx.squaredNorm();
  SlopeFit fit;
  fit.slope = cx.dot(ly) / sxx;
  fit.intercept = ly.mean() - fit.slope * mx;
  if (!value_ses.empty()) {
    // Var(log v_i) ~ (se_i / v_i)^2; the slope is linear in log v.
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      var += std::pow(cx[i] / sxx, 2) * std::pow(value_ses[i] / values[i], 2);
    fit.se = std::sqrt(var);
  }
  fit.ci_lo = fit.slope - 1.96 * fit.se;
  fit.ci_hi = fit.slope + 1.96 * fit.se;
  return fit;
}

const Summary& ExperimentReport::summary(const std::string& key) const
{
  for (const auto& s : summaries)
    if (s.name == key)
      return s;
  throw std::out_of_range("no summary named " + key);
}

const SlopeFit& ExperimentReport::slope(const std::string& key) const
{
  for (const auto& [name, fit] : slopes)
    if (name == key)
      return fit;
  throw std::out_of_range("no slope named " + key);
}

namespace {

std::string fmt_n(Eigen::Index n)
{
  return std::to_string(static_cast<long long>(n));
}

// Levels evaluated by the test for a dataset of size n.
std::vector<int> test_levels(const TestSetup& setup, Eigen::Index n, const WaveletBasis& basis)
{
  const int d = basis.dim();
  if (setup.kind == TestKind::simple) {
    const int j0 = std::clamp(test_level(n, setup.simple.beta, d), basis.base_level(),
                              basis.max_level());
    return { j0 };
  }
  const int j0 = std::clamp(test_level(n / 2, setup.composite.beta2, d), basis.base_level(),
                            basis.max_level());
  std::vector<int> out;
  for (int l = basis.base_level(); l <= j0; ++l)
    out.push_back(l);
  return out;
}

TestOutcome run_test(const TestSetup& setup, const Dataset& data, const WaveletBasis& basis)
{
  if (setup.kind == TestKind::simple)
    return simple_null_test(data, setup.simple, basis);
  return composite_test(data, setup.composite, setup.params, setup.density_lepski, basis);
}

// Order statistic giving the smallest threshold with at most floor(alpha R)
// exceedances.
double size_threshold(std::vector<double> scores, double alpha)
{
  std::sort(scores.begin(), scores.end());
  const auto R = static_cast<long>(scores.size());
  const long allowed = static_cast<long>(std::floor(alpha * R + 1e-9));
  const long idx = std::max(0L, R - 1 - allowed);
  return std::max(0.0, scores[static_cast<std::size_t>(idx)]);
}

} // namespace

ExperimentReport mc_rejection_rate(const TestSetup& setup, const ModelFactory& models,
                                   Eigen::Index n, int reps, std::uint64_t seed,
                                   const WaveletBasis& basis, int threads)
{
  if (reps < 1)
    throw std::invalid_argument("mc_rejection_rate needs reps >= 1");
  const std::vector<int> levels = test_levels(setup, n, basis);
  const int width = 2 + static_cast<int>(levels.size());
  ExperimentReport rep;
  rep.name = setup.kind == TestKind::simple ? "rejection-simple" : "rejection-composite";
  rep.seed = seed;
  rep.reps = reps;
  rep.columns = { "reject", "max_excess" };
  for (int l : levels)
    rep.columns.push_back("T_" + std::to_string(l));

  rep.records = run_replicates(reps, seed, threads, width, [&](int, Rng& rng, auto row) {
    const ModelSpec model = models(rng);
    const Dataset data = sample_dataset(model, n, rng);
    const TestOutcome out = run_test(setup, data, basis);
    double excess = -INFINITY;
    for (std::size_t i = 0; i < out.statistics.size(); ++i) {
      const double stat = setup.kind == TestKind::simple ? std::abs(out.statistics[i])
                                                         : out.statistics[i];
      excess = std::max(excess, stat - out.cutoffs[i]);
      row[2 + static_cast<Eigen::Index>(i)] = out.statistics[i];
    }
    row[0] = out.reject ? 1.0 : 0.0;
    row[1] = excess;
  });
  rep.summaries.push_back(summarize_mean("rejection_rate", rep.records.col(0)));
  rep.constants = { { "n", static_cast<double>(n) } };
  return rep;
}

ExperimentReport mc_rejection_rate(const TestSetup& setup, const ModelSpec& model, Eigen::Index n,
                                   int reps, std::uint64_t seed, const WaveletBasis& basis,
                                   int threads)
{
  return mc_rejection_rate(
    setup, [&model](Rng&) { return model; }, n, reps, seed, basis, threads);
}

namespace {

int truth_resolution(const ConfidenceConfig& cfg)
{
  return cfg.grid_resolution > 0 ? cfg.grid_resolution : 12;
}

const std::vector<std::string> kCoverageColumns = { "covered", "dist2",  "radius2", "U_hat",
                                                    "slack",   "beta_hat", "j1",    "tau2",
                                                    "regression_level", "clamp_violations" };

} // namespace

ExperimentReport mc_coverage(const ModelSpec& model, Eigen::Index n, int reps,
                             const ConfidenceConfig& cfg_in, std::uint64_t seed,
                             const WaveletBasis& basis, int threads)
{
  if (reps < 1)
    throw std::invalid_argument("mc_coverage needs reps >= 1");
  ConfidenceConfig cfg = cfg_in;
  cfg.grid_resolution = truth_resolution(cfg_in);
  const GridFunction truth = model.f_grid(cfg.grid_resolution);

  ExperimentReport rep;
  rep.name = "coverage";
  rep.seed = seed;
  rep.reps = reps;
  rep.columns = kCoverageColumns;
  rep.records = run_replicates(reps, seed, threads, static_cast<int>(rep.columns.size()),
                               [&](int, Rng& rng, auto row) {
                                 const Dataset data = sample_dataset(model, n, rng);
                                 const ConfidenceBall ball = build_confidence_ball(data, cfg, basis);
                                 const double dist2 = squared_l2_distance(truth, ball.center);
                                 row[0] = ball.contains_distance(dist2) ? 1.0 : 0.0;
                                 row[1] = dist2;
                                 row[2] = radius_upper_bound(ball);
                                 row[3] = ball.U_hat;
                                 row[4] = ball.deterministic_slack;
                                 row[5] = ball.beta_hat;
                                 row[6] = ball.j1;
                                 row[7] = ball.tau_squared(dist2);
                                 row[8] = ball.regression_level;
                                 row[9] = static_cast<double>(ball.clamp_violations);
                               });
  rep.summaries.push_back(summarize_mean("coverage", rep.records.col(0)));
  rep.summaries.push_back(summarize_median("median_radius2", rep.records.col(2)));
  rep.summaries.push_back(summarize_mean("mean_radius2", rep.records.col(2)));
  rep.summaries.push_back(summarize_mean("mean_beta_hat", rep.records.col(5)));
  rep.summaries.push_back(summarize_mean("clamp_violations", rep.records.col(9)));
  rep.constants = { { "n", static_cast<double>(n) },  { "alpha", cfg.alpha },
                    { "z_alpha", cfg.z() },           { "C1", cfg.C1 },
                    { "C2", cfg.C2 },                 { "slack_const", cfg.slack_const },
                    { "zeta", cfg.zeta },             { "C_star", cfg.C_star },
                    { "lepski_density", cfg.lepski_density },
                    { "lepski_regression", cfg.lepski_regression } };
  return rep;
}

ExperimentReport mc_radius_rate(const ModelSpec& model, const std::vector<Eigen::Index>& ns,
                                int reps, const ConfidenceConfig& cfg, std::uint64_t seed,
                                const WaveletBasis& basis, int threads)
{
  ExperimentReport rep;
  rep.name = "radius-rate";
  rep.seed = seed;
  rep.reps = reps;
  rep.columns = kCoverageColumns;
  rep.columns.insert(rep.columns.begin(), "n");
  std::vector<double> nd, med, med_se;
  std::vector<Eigen::MatrixXd> blocks;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const ExperimentReport one =
      mc_coverage(model, ns[i], reps, cfg, stream_seed(seed, 1000 + i), basis, threads);
    Eigen::MatrixXd block(one.records.rows(), one.records.cols() + 1);
    block.col(0).setConstant(static_cast<double>(ns[i]));
    block.rightCols(one.records.cols()) = one.records;
    blocks.push_back(block);
    const Summary m = one.summary("median_radius2");
    rep.summaries.push_back({ "median_radius2@" + fmt_n(ns[i]), m.value, m.se });
    const Summary c = one.summary("coverage");
    rep.summaries.push_back({ "coverage@" + fmt_n(ns[i]), c.value, c.se });
    nd.push_back(static_cast<double>(ns[i]));
    med.push_back(m.value);
    med_se.push_back(m.se);
    if (rep.constants.empty())
      rep.constants = one.constants;
  }
  Eigen::Index rows = 0;
  for (const auto& b : blocks)
    rows += b.rows();
  rep.records.resize(rows, static_cast<Eigen::Index>(rep.columns.size()));
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    rep.records.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  rep.slopes.emplace_back("radius", rate_slope(nd, med, med_se));
  return rep;
}

ExperimentReport mc_rate(const RateSetup& setup, const ModelSpec& model,
                         const std::vector<Eigen::Index>& ns, int reps, std::uint64_t seed,
                         const WaveletBasis& basis, int threads)
{
  if (reps < 1)
    throw std::invalid_argument("mc_rate needs reps >= 1");
  const int R = setup.eval_resolution;
  const bool density = setup.target == RateTarget::density;
  const GridFunction truth = density ? model.g_grid(R) : model.f_grid(R);

  ExperimentReport rep;
  rep.name = density ? "density-rate" : "regression-rate";
  rep.seed = seed;
  rep.reps = reps;
  rep.columns = { "n", "mse", "level", "clamp_violations", "g_min", "g_max", "f_min", "f_max" };
  std::vector<double> nd, mse, mse_se;
  std::vector<Eigen::MatrixXd> blocks;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const Eigen::Index n = ns[i];
    Eigen::MatrixXd block = run_replicates(
      reps, stream_seed(seed, 2000 + i), threads, static_cast<int>(rep.columns.size()),
      [&](int, Rng& rng, auto row) {
        const Dataset data = sample_dataset(model, n, rng);
        row[0] = static_cast<double>(n);
        double violations = 0.0;
        row[6] = NAN;
        row[7] = NAN;
        auto check = [&](const GridFunction& est, double lo, double hi, Eigen::Index c_min) {
          const double vmin = est.values.minCoeff();
          const double vmax = est.values.maxCoeff();
          row[c_min] = vmin;
          row[c_min + 1] = vmax;
          violations += ((est.values < lo) || (est.values > hi)).count();
        };
        if (density) {
          const AdaptiveDensityEstimate g =
            estimate_density(data.x, setup.params, basis, setup.lepski_density);
          const GridFunction est = g.materialize(basis, R);
          check(est, g.lower(), g.upper(), 4);
          row[1] = squared_l2_distance(est, truth);
          row[2] = g.selected_level;
        } else {
          const RegressionFit fit = estimate_regression(
            data, setup.params, basis, setup.lepski_regression, setup.lepski_density);
          const GridFunction est = fit.regression.materialize(basis, R);
          check(fit.density.materialize(basis, R), fit.density.lower(), fit.density.upper(), 4);
          check(est, fit.regression.lower(), fit.regression.upper(), 6);
          row[1] = squared_l2_distance(est, truth);
          row[2] = fit.regression.selected_level;
        }
        row[3] = violations;
      });
    const Summary s = summarize_mean("mse@" + fmt_n(n), block.col(1));
    rep.summaries.push_back(s);
    rep.summaries.push_back(summarize_mean("level@" + fmt_n(n), block.col(2)));
    nd.push_back(static_cast<double>(n));
    mse.push_back(s.value);
    mse_se.push_back(s.se);
    blocks.push_back(std::move(block));
  }
  Eigen::Index rows = 0;
  for (const auto& b : blocks)
    rows += b.rows();
  rep.records.resize(rows, static_cast<Eigen::Index>(rep.columns.size()));
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    rep.records.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  rep.summaries.push_back(summarize_mean("clamp_violations", rep.records.col(3)));
  if (ns.size() >= 3)
    rep.slopes.emplace_back("mse", rate_slope(nd, mse, mse_se));
  rep.constants = { { "lepski_density", setup.lepski_density },
                    { "lepski_regression", setup.lepski_regression },
                    { "eval_resolution", static_cast<double>(R) } };
  return rep;
}

ModelFactory simple_bump_alternatives(const SimpleTestConfig& cfg, Eigen::Index n, double D,
                                      const WaveletBasis& basis, int resolution)
{
  const int d = basis.dim();
  const int j0 = std::clamp(test_level(n, cfg.beta, d), basis.base_level(), basis.max_level());
  const int k = 1 << (std::max(0, j0 - 2) * d);
  const double rho2 = minimax_separation(static_cast<double>(n), cfg.beta, d, D);
  const double eps = std::sqrt(rho2) * std::pow(static_cast<double>(k), cfg.beta / d);
  const double beta = cfg.beta;
  // Validate the amplitude once so the failure surfaces before sampling.
  make_bump_regression(k, beta, d, eps, std::vector<int>(k, 1), resolution);
  return [=](Rng& rng) {
    const GridFunction f =
      make_bump_regression(k, beta, d, eps, random_signs(k, rng), resolution);
    ModelSpec m;
    m.dim = d;
    m.f_tag = "bump";
    m.g_tag = "uniform";
    m.f = grid_lookup(f);
    m.g = uniform_density();
    m.beta = beta;
    m.gamma = INFINITY;
    m.g_upper = 1.0;
    return m;
  };
}

namespace {

int composite_cells(const CompositeTestConfig& cfg, Eigen::Index n_half, int dim)
{
  const int j0 = test_level(n_half, cfg.beta2, dim);
  return 1 << (std::max(0, j0 - 2) * dim);
}

} // namespace

double composite_bump_amplitude(const CompositeTestConfig& cfg, Eigen::Index n_half, double D,
                                int dim, int resolution)
{
  const int k = composite_cells(cfg, n_half, dim);
  const double target =
    std::sqrt(minimax_separation(static_cast<double>(n_half), cfg.beta2, dim, D));
  const WaveletBasis haar = WaveletBasis::build(Family::haar, 1, dim, resolution);
  const std::vector<int> plus(k, 1);
  // Unit-amplitude profile; f = 1/2 + a * profile.
  const GridFunction unit = make_bump_regression(k, 0.0, dim, 1e-9, plus, resolution);
  GridFunction profile = unit;
  profile.values = (unit.values - 0.5) / 1e-9;
  const double a_max = 0.5 / profile.values.abs().maxCoeff() * (1.0 - 1e-6);

  auto distance = [&](double a) {
    GridFunction f = profile;
    f.values = 0.5 + a * profile.values;
    return distance_to_besov_ball(analyze(haar, f, resolution - 2), cfg.beta1, cfg.M);
  };
  if (distance(a_max) < target)
    throw CalibrationError("separation out of reach for f inside (0, 1)");
  double lo = 0.0, hi = a_max;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (distance(mid) < target ? lo : hi) = mid;
  }
  return hi;
}

ModelFactory composite_bump_alternatives(const CompositeTestConfig& cfg, Eigen::Index n_half,
                                         double D, const WaveletBasis& basis, int resolution)
{
  const int d = basis.dim();
  const int k = composite_cells(cfg, n_half, d);
  const double a = composite_bump_amplitude(cfg, n_half, D, d, resolution);
  // make_bump_regression scales by eps k^{-beta/d}; beta = 0 keeps eps = a.
  const double beta2 = cfg.beta2;
  return [=](Rng& rng) {
    const GridFunction f = make_bump_regression(k, 0.0, d, a, random_signs(k, rng), resolution);
    ModelSpec m;
    m.dim = d;
    m.f_tag = "bump";
    m.g_tag = "uniform";
    m.f = grid_lookup(f);
    m.g = uniform_density();
    m.beta = beta2;
    m.gamma = INFINITY;
    m.g_upper = 1.0;
    return m;
  };
}

std::string panel_hash(const std::vector<ModelSpec>& panel, Eigen::Index n)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  mix(std::to_string(static_cast<long long>(n)));
  for (const auto& m : panel) {
    mix(m.f_tag);
    mix(m.g_tag);
    // Tags alone do not identify parametrized models; fold in grid values.
    const GridFunction f = m.f_grid(m.dim == 1 ? 10 : 4);
    const GridFunction g = m.g_grid(m.dim == 1 ? 10 : 4);
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g,%.12g;", f.values[i], g.values[i]);
      mix(buf);
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

CalibrationResult calibrate_simple(const std::vector<ModelSpec>& panel, Eigen::Index n,
                                   const SimpleTestConfig& cfg, int reps, std::uint64_t seed,
                                   const WaveletBasis& basis, int threads)
{
  if (panel.empty() || reps < 1)
    throw std::invalid_argument("calibration needs a panel and reps >= 1");
  TestSetup setup;
  setup.kind = TestKind::simple;
  setup.simple = cfg;
  setup.simple.C = 0.0;
  const int j0 = test_levels(setup, n, basis).front();
  const double scale = static_cast<double>(n) / std::sqrt(std::ldexp(1.0, j0 * basis.dim()));

  CalibrationResult res;
  res.target = "simple.C";
  res.seed = seed;
  res.reps = reps;
  res.panel_hash = panel_hash(panel, n);
  for (std::size_t m = 0; m < panel.size(); ++m) {
    const ExperimentReport r =
      mc_rejection_rate(setup, panel[m], n, reps, stream_seed(seed, m), basis, threads);
    std::vector<double> scores(reps);
    for (int i = 0; i < reps; ++i)
      scores[i] = std::abs(r.records(i, 2)) * scale;
    res.value = std::max(res.value, size_threshold(scores, cfg.alpha));
  }
  // Achieved size: the worst model at the returned constant.
  for (std::size_t m = 0; m < panel.size(); ++m) {
    setup.simple.C = res.value;
    const ExperimentReport r =
      mc_rejection_rate(setup, panel[m], n, reps, stream_seed(seed, m), basis, threads);
    res.achieved = std::max(res.achieved, r.summary("rejection_rate").value);
  }
  res.details = { { "alpha", cfg.alpha }, { "n", static_cast<double>(n) },
                  { "j0", static_cast<double>(j0) } };
  return res;
}

CalibrationResult calibrate_composite(const std::vector<ModelSpec>& panel, Eigen::Index n,
                                      const TestSetup& setup_in, int reps, std::uint64_t seed,
                                      const WaveletBasis& basis, int threads)
{
  if (panel.empty() || reps < 1)
    throw std::invalid_argument("calibration needs a panel and reps >= 1");
  TestSetup setup = setup_in;
  setup.kind = TestKind::composite;
  const CompositeTestConfig& c = setup.composite;
  const Eigen::Index half = n / 2;
  const int d = basis.dim();
  const std::vector<int> levels = test_levels(setup, n, basis);
  const int j0 = levels.back();

  CalibrationResult res;
  res.target = "composite.zeta";
  res.seed = seed;
  res.reps = reps;
  res.panel_hash = panel_hash(panel, n);
  std::vector<ExperimentReport> runs;
  for (std::size_t m = 0; m < panel.size(); ++m) {
    runs.push_back(
      mc_rejection_rate(setup, panel[m], n, reps, stream_seed(seed, m), basis, threads));
    const ExperimentReport& r = runs.back();
    std::vector<double> needed(reps, 0.0);
    for (int i = 0; i < reps; ++i)
      for (std::size_t li = 0; li < levels.size(); ++li) {
        const double T = r.records(i, 2 + static_cast<Eigen::Index>(li));
        if (T <= 0.0)
          continue;
        CompositeTestConfig no_zeta = c;
        no_zeta.zeta = 0.0;
        const double base = std::sqrt(composite_cutoff(no_zeta, levels[li], j0, half, d));
        const double w = std::exp2((levels[li] + j0) * d / 8.0) / std::sqrt(double(half));
        needed[i] = std::max(needed[i], (std::sqrt(T) - base) / w);
      }
    res.value = std::max(res.value, size_threshold(needed, c.alpha));
  }
  setup.composite.zeta = res.value;
  for (std::size_t m = 0; m < panel.size(); ++m) {
    const ExperimentReport r =
      mc_rejection_rate(setup, panel[m], n, reps, stream_seed(seed, m), basis, threads);
    res.achieved = std::max(res.achieved, r.summary("rejection_rate").value);
  }
  res.details = { { "alpha", c.alpha }, { "n", static_cast<double>(n) },
                  { "j0", static_cast<double>(j0) }, { "M", c.M }, { "beta1", c.beta1 },
                  { "beta2", c.beta2 } };
  return res;
}

CalibrationResult calibrate_separation(const TestSetup& setup, Eigen::Index n,
                                       double target_power, int reps, std::uint64_t seed,
                                       const WaveletBasis& basis, double D_lo, double D_hi,
                                       int threads)
{
  if (!(D_lo > 0.0) || !(D_hi > D_lo) || !(target_power > 0.0 && target_power < 1.0))
    throw std::invalid_argument("separation calibration needs 0 < D_lo < D_hi and a power in (0,1)");
  auto power = [&](double D) {
    const ModelFactory alt = setup.kind == TestKind::simple
                               ? simple_bump_alternatives(setup.simple, n, D, basis)
                               : composite_bump_alternatives(setup.composite, n / 2, D, basis);
    return mc_rejection_rate(setup, alt, n, reps, seed, basis, threads)
      .summary("rejection_rate")
      .value;
  };

  CalibrationResult res;
  res.target = setup.kind == TestKind::simple ? "simple.D" : "composite.D";
  res.seed = seed;
  res.reps = reps;
  double p_hi = 0.0;
  try {
    p_hi = power(D_hi);
  } catch (const std::invalid_argument& e) {
    throw CalibrationError(std::string("upper separation infeasible: ") + e.what());
  }
  if (p_hi < target_power)
    throw CalibrationError("power " + std::to_string(p_hi) + " at D = " + std::to_string(D_hi) +
                           " below target");
  double lo = D_lo, hi = D_hi, p_at_hi = p_hi;
  for (int it = 0; it < 24 && hi / lo > 1.01; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double p = power(mid);
    if (p >= target_power) {
      hi = mid;
      p_at_hi = p;
    } else {
      lo = mid;
    }
  }
  res.value = hi;
  res.achieved = p_at_hi;
  res.details = { { "target_power", target_power }, { "n", static_cast<double>(n) } };
  return res;
}

CalibrationResult calibrate_lepski(RateTarget target, const std::vector<ModelSpec>& panel,
                                   Eigen::Index n, const RateSetup& setup,
                                   const std::vector<double>& grid, double agreement, int reps,
                                   std::uint64_t seed, const WaveletBasis& basis, int threads)
{
  if (panel.empty() || grid.empty() || reps < 1)
    throw std::invalid_argument("Lepski calibration needs a panel, a grid and reps >= 1");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  const int G = static_cast<int>(sorted.size());
  const int R = setup.eval_resolution;
  const bool density = target == RateTarget::density;

  Eigen::VectorXd worst = Eigen::VectorXd::Constant(G, 1.0);
  for (std::size_t m = 0; m < panel.size(); ++m) {
    const ModelSpec& model = panel[m];
    const GridFunction truth = density ? model.g_grid(R) : model.f_grid(R);
    const CoeffTree truth_tree = analyze(basis, truth, R - 2);
    const Eigen::MatrixXd hits = run_replicates(
      reps, stream_seed(seed, m), threads, G, [&](int, Rng& rng, auto row) {
        const Dataset data = sample_dataset(model, n, rng);
        CoeffTree tree;
        LevelRange levels;
        Eigen::Index n_used = 0;
        if (density) {
          const AdaptiveDensityEstimate g =
            estimate_density(data.x, setup.params, basis, setup.lepski_density);
          tree = g.coeffs;
          levels = g.levels;
          n_used = g.n;
        } else {
          const RegressionFit fit = estimate_regression(
            data, setup.params, basis, setup.lepski_regression, setup.lepski_density);
          tree = fit.regression.coeffs;
          levels = fit.regression.levels;
          n_used = fit.regression.n;
        }
        // Squared error of each candidate: coefficient error up to the
        // level plus the truth's energy beyond it.
        int oracle = levels.lo;
        double best = INFINITY;
        for (int j = levels.lo; j <= levels.hi; ++j) {
          double err = (tree.scaling - truth_tree.scaling).squaredNorm();
          for (int l = truth_tree.base_level; l <= truth_tree.max_level; ++l) {
            const double t = std::pow(truth_tree.level_norm(l), 2);
            if (l < j) {
              for (int v = 1; v <= truth_tree.num_orientations(); ++v)
                err += (tree.detail(l, v) - truth_tree.detail(l, v)).squaredNorm();
            } else {
              err += t;
            }
          }
          if (err < best) {
            best = err;
            oracle = j;
          }
        }
        for (int c = 0; c < G; ++c)
          row[c] = std::abs(lepski_select(tree, levels, sorted[c], n_used) - oracle) <= 1;
      });
    for (int c = 0; c < G; ++c)
      worst[c] = std::min(worst[c], hits.col(c).mean());
  }

  CalibrationResult res;
  res.target = density ? "lepski.density" : "lepski.regression";
  res.seed = seed;
  res.reps = reps;
  res.panel_hash = panel_hash(panel, n);
  for (int c = 0; c < G; ++c)
    res.details.emplace_back("agreement@" + std::to_string(sorted[c]), worst[c]);
  for (int c = 0; c < G; ++c)
    if (worst[c] >= agreement) {
      res.value = sorted[c];
      res.achieved = worst[c];
      return res;
    }
  throw CalibrationError("no Lepski constant on the grid reaches the agreement target");
}

CalibrationResult calibrate_confidence(const std::vector<ModelSpec>& panel, Eigen::Index n,
                                       const ConfidenceConfig& cfg, int reps,
                                       std::uint64_t seed, const WaveletBasis& basis,
                                       int max_halvings, int threads)
{
  if (panel.empty() || reps < 1)
    throw std::invalid_argument("calibration needs a panel and reps >= 1");
  std::vector<ExperimentReport> runs;
  for (std::size_t m = 0; m < panel.size(); ++m)
    runs.push_back(mc_coverage(panel[m], n, reps, cfg, stream_seed(seed, m), basis, threads));

  // Every ball component except the constants is data-driven, so coverage
  // at any factor follows from the stored records.
  const double third = static_cast<double>(n / 3);
  const double z = cfg.z();
  auto coverage = [&](const ExperimentReport& r, double kappa) {
    int hit = 0;
    for (Eigen::Index i = 0; i < r.records.rows(); ++i) {
      const double dist2 = r.records(i, 1);
      const double U = r.records(i, 3);
      const double slack = r.records(i, 4);
      const double j1 = r.records(i, 6);
      const double tau2 = cfg.C1 * dist2 / third +
                          cfg.C2 * std::ldexp(1.0, static_cast<int>(j1) * basis.dim()) /
                            (third * (third - 1.0));
      hit += dist2 <= U + kappa * slack + z * std::sqrt(kappa * tau2);
    }
    return hit / static_cast<double>(r.records.rows());
  };

  CalibrationResult res;
  res.target = "confidence.kappa";
  res.seed = seed;
  res.reps = reps;
  res.panel_hash = panel_hash(panel, n);
  double kappa = 1.0, achieved = 1.0;
  for (int m = 0; m <= max_halvings; ++m) {
    const double k = std::ldexp(1.0, -m);
    double worst = 1.0;
    for (const auto& r : runs)
      worst = std::min(worst, coverage(r, k));
    res.details.emplace_back("coverage@" + std::to_string(k), worst);
    if (worst < 1.0 - cfg.alpha)
      break;
    kappa = k;
    achieved = worst;
  }
  if (achieved < 1.0 - cfg.alpha)
    throw CalibrationError("coverage below 1 - alpha even at the base constants");
  res.value = kappa;
  res.achieved = achieved;
  res.details.emplace_back("C1", cfg.C1 * kappa);
  res.details.emplace_back("C2", cfg.C2 * kappa);
  res.details.emplace_back("slack_const", cfg.slack_const * kappa);
  return res;
}

} // namespace binreg
