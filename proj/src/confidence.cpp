#include "binreg/confidence.hpp"

#include "binreg/ustat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace binreg {

BetaGrid beta_grid(double beta_min, double beta_max)
{
  if (!(beta_min > 0.0) || !(beta_max > 2.0 * beta_min))
    throw std::invalid_argument("beta grid needs 0 < beta_min and beta_max > 2 beta_min");
  BetaGrid g;
  g.beta_min = beta_min;
  g.beta_max = beta_max;
  g.N = static_cast<int>(std::ceil(std::log2(beta_max / beta_min) - 1e-12));
  for (int j = 1; j <= g.N; ++j)
    g.levels.push_back(std::ldexp(beta_min, j - 1));
  return g;
}

double shell_radius(double n, double beta, int dim, double M_star)
{
  if (!(n > 0.0) || !(beta > 0.0) || dim < 1 || !(M_star > 0.0))
    throw std::invalid_argument("shell_radius needs positive inputs");
  const double r = beta / dim;
  return M_star * std::pow(n, -2.0 * r / (4.0 * r + 1.0));
}

void ConfidenceConfig::validate() const
{
  params.require_confidence();
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
  if (z_alpha != 0.0 && !(z_alpha >= 1.0 / alpha))
    throw std::invalid_argument("z(alpha) must be at least 1 / alpha");
  if (!(C1 >= 0.0) || !(C2 >= 0.0) || !(slack_const >= 0.0) || !(M_star > 0.0))
    throw std::invalid_argument("confidence constants must be nonnegative");
  if (!(zeta >= 0.0) || !(C_star >= 0.0) || !(lepski_density >= 0.0) ||
      !(lepski_regression >= 0.0))
    throw std::invalid_argument("test and Lepski constants must be nonnegative");
}

CompositeTestConfig shell_test_config(const ConfidenceConfig& cfg, const BetaGrid& grid, int j)
{
  if (j < 1 || j >= grid.N)
    throw std::out_of_range("shell test index out of range");
  CompositeTestConfig t;
  t.beta1 = grid.levels[j];
  t.beta2 = grid.levels[j - 1];
  t.gamma_min = cfg.params.gamma_min;
  t.alpha = cfg.alpha / (4.0 * grid.N);
  t.M = cfg.params.M;
  t.zeta = cfg.zeta;
  t.C_star = cfg.C_star;
  t.B_L_prime = 0.5 * cfg.params.B_L;
  return t;
}

SmoothnessSelection select_smoothness(const Dataset& part, const AdaptiveDensityEstimate& density,
                                      const BetaGrid& grid, const ConfidenceConfig& cfg,
                                      const WaveletBasis& basis)
{
  if (part.size() == 0)
    throw std::invalid_argument("smoothness selection on an empty sample");
  SmoothnessSelection sel;
  sel.test_alpha = cfg.alpha / (4.0 * grid.N);
  for (int j = 1; j < grid.N; ++j) {
    sel.trace.push_back(composite_test(part, density, shell_test_config(cfg, grid, j), basis));
    if (sel.trace.back().reject) {
      sel.index = j;
      sel.beta_hat = grid.levels[j - 1];
      return sel;
    }
  }
  sel.index = grid.N;
  sel.beta_hat = grid.levels.back();
  return sel;
}

SmoothnessSelection select_smoothness(const Dataset& part, const BetaGrid& grid,
                                      const ConfidenceConfig& cfg, const WaveletBasis& basis)
{
  const std::vector<Dataset> halves = split_dataset(part, 2);
  const AdaptiveDensityEstimate density =
    estimate_density(halves[1].x, cfg.params, basis, cfg.lepski_density);
  return select_smoothness(halves[0], density, grid, cfg, basis);
}

double ConfidenceBall::tau_squared(double dist2) const
{
  const double nd = static_cast<double>(n);
  return tau_const_C1 * dist2 / nd +
         tau_const_C2 * std::ldexp(1.0, j1 * dim) / (nd * (nd - 1.0));
}

bool ConfidenceBall::contains_distance(double dist2) const
{
  return dist2 <= U_hat + deterministic_slack + z_alpha * std::sqrt(tau_squared(dist2));
}

ConfidenceBall build_confidence_ball(const Dataset& data, const ConfidenceConfig& cfg,
                                     const WaveletBasis& basis)
{
  cfg.validate();
  data.validate();
  if (data.dim() != basis.dim())
    throw std::invalid_argument("dataset dimension does not match the basis");
  if (data.size() < 6)
    throw std::invalid_argument("confidence ball needs at least two observations per third");
  const std::vector<Dataset> parts = split_dataset(data, 3);
  const Eigen::Index n = parts[0].size();
  const int d = basis.dim();
  const ClassParams& p = cfg.params;

  const AdaptiveDensityEstimate density =
    estimate_density(parts[1].x, p, basis, cfg.lepski_density);
  const AdaptiveRegressionEstimate fhat =
    estimate_regression(parts[0], density, p, basis, cfg.lepski_regression);

  ConfidenceBall ball;
  ball.selection = select_smoothness(parts[0], density, beta_grid(p.beta_min, p.beta_max), cfg,
                                     basis);
  ball.beta_hat = ball.selection.beta_hat;
  ball.n = n;
  ball.dim = d;
  ball.regression_level = fhat.selected_level;
  ball.density_level = density.selected_level;
  const int resolution = cfg.grid_resolution > 0 ? cfg.grid_resolution
                                                 : default_grid_resolution(basis, fhat.levels);
  ball.center = fhat.materialize(basis, resolution);
  ball.clamp_violations =
    ((ball.center.values < fhat.lower()) || (ball.center.values > fhat.upper())).count();

  const int j1_formula = test_level(n, ball.beta_hat, d);
  ball.j1 = std::clamp(j1_formula, basis.base_level(), basis.max_level());

  const Dataset& third = parts[2];
  const Eigen::VectorXd ghat = density.evaluate(basis, third.x);
  ball.clamp_violations +=
    ((ghat.array() < density.lower()) || (ghat.array() > density.upper())).count();
  const Eigen::VectorXd resid = third.y - fhat.evaluate(basis, third.x);
  const WeightedSample ws{ third.x, resid.cwiseQuotient(ghat), 1.0 / density.lower() };
  ball.U_hat = ustat_fast(basis, ws, ball.j1, KernelKind::V);
  if (cfg.floor_U)
    ball.U_hat = std::max(ball.U_hat, 0.0);

  const double nd = static_cast<double>(n);
  const double b = ball.beta_hat;
  const double g = p.gamma_min;
  ball.deterministic_slack =
    cfg.slack_const * (std::pow(nd, -4.0 * b / (4.0 * b + d)) +
                       std::pow(nd, -b / (2.0 * b + d)) * std::pow(nd, -g / (2.0 * g + d)));
  ball.z_alpha = cfg.z();
  ball.tau_const_C1 = cfg.C1;
  ball.tau_const_C2 = cfg.C2;
  return ball;
}

bool contains(const ConfidenceBall& ball, const GridFunction& h)
{
  return ball.contains_distance(squared_l2_distance(h, ball.center));
}

double radius_upper_bound(const ConfidenceBall& ball)
{
  // With s = r^2: (s - A)^2 = z^2 (C1 s / n + B), s >= A; take the larger root.
  const double nd = static_cast<double>(ball.n);
  const double A = ball.U_hat + ball.deterministic_slack;
  const double B = ball.tau_squared(0.0);
  const double z = ball.z_alpha;
  const double c = z * z * ball.tau_const_C1 / (2.0 * nd);
  const double disc = (A + c) * (A + c) - A * A + z * z * B;
  if (disc < 0.0)
    return 0.0;
  return std::max(0.0, A + c + std::sqrt(disc));
}

} // namespace binreg
