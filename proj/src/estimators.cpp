#include "binreg/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace binreg {

void ClassParams::validate() const
{
  const double all[] = { beta_min, beta_max, gamma_min, gamma_max, M, M_prime, B_L, B_U };
  for (double v : all)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("class parameters must be positive and finite");
  if (beta_min > beta_max)
    throw std::invalid_argument("beta_min exceeds beta_max");
  if (gamma_min > gamma_max)
    throw std::invalid_argument("gamma_min exceeds gamma_max");
  if (B_L > B_U)
    throw std::invalid_argument("B_L exceeds B_U");
}

void ClassParams::require_estimation() const
{
  validate();
  if (!(gamma_min > beta_max))
    throw std::invalid_argument("regression estimation requires gamma_min > beta_max");
}

void ClassParams::require_confidence() const
{
  validate();
  if (!(gamma_min > 2.0 * beta_max))
    throw std::invalid_argument("confidence sets require gamma_min > 2 beta_max");
}

int dyadic_level(double q, int dim)
{
  // Guard against pow() landing just below an exact power of two.
  const double floor_q = std::floor(q * (1.0 + 1e-12));
  int level = 0;
  while (std::ldexp(1.0, (level + 1) * dim) <= floor_q)
    ++level;
  return level;
}

LevelGrids level_grids(Eigen::Index n, int dim, const ClassParams& params,
                       const WaveletBasis& basis)
{
  params.validate();
  if (n < 4)
    throw std::invalid_argument("level grids need n >= 4");
  if (dim != basis.dim())
    throw std::invalid_argument("dimension does not match the basis");
  const double nd = static_cast<double>(n);
  const double d = dim;
  auto level = [&](double smoothness) {
    const int l = dyadic_level(std::pow(nd, 1.0 / (2.0 * smoothness / d + 1.0)), dim);
    return std::clamp(l, basis.base_level(), basis.max_level());
  };
  LevelGrids g;
  g.regression = { level(params.beta_max), level(params.beta_min) };
  g.density = { level(params.gamma_max), level(params.gamma_min) };
  return g;
}

GridFunction density_candidate(const WaveletBasis& basis, const PointMatrix& points, int level,
                               int resolution)
{
  basis.check_level(level);
  if (points.cols() == 0)
    throw std::invalid_argument("density candidate from an empty sample");
  const CoeffTree t = empirical_coefficients(
    basis, points, Eigen::VectorXd::Ones(points.cols()), level - 1);
  return synthesize(basis, t, level, resolution < 0 ? level + 2 : resolution,
                    Interpretation::generic);
}

int lepski_select(const LevelRange& levels, const std::function<double(int, int)>& distance,
                  double C, Eigen::Index n, int dim)
{
  if (levels.count() < 1)
    throw std::invalid_argument("Lepski selection over an empty level range");
  if (C < 0.0 || n < 1)
    throw std::invalid_argument("Lepski selection needs C >= 0 and n >= 1");
  const double nd = static_cast<double>(n);
  for (int j = levels.lo; j < levels.hi; ++j) {
    bool ok = true;
    for (int l = j + 1; l <= levels.hi && ok; ++l)
      ok = distance(j, l) <= C * std::sqrt(std::ldexp(1.0, l * dim) / nd);
    if (ok)
      return j;
  }
  return levels.hi;
}

int lepski_select(const std::map<int, GridFunction>& candidates, double C, Eigen::Index n,
                  int dim)
{
  if (candidates.empty())
    throw std::invalid_argument("Lepski selection needs candidates");
  const LevelRange levels{ candidates.begin()->first, candidates.rbegin()->first };
  if (static_cast<std::size_t>(levels.count()) != candidates.size())
    throw std::invalid_argument("Lepski candidates must cover a contiguous level range");
  return lepski_select(
    levels,
    [&](int j, int l) {
      return std::sqrt(squared_l2_distance(candidates.at(j), candidates.at(l)));
    },
    C, n, dim);
}

int lepski_select(const CoeffTree& coeffs, const LevelRange& levels, double C, Eigen::Index n)
{
  if (levels.lo < coeffs.base_level || levels.hi > coeffs.max_level + 1)
    throw std::out_of_range("Lepski levels not covered by the coefficient tree");
  Eigen::VectorXd energy(levels.count());
  for (int l = levels.lo; l < levels.hi; ++l)
    energy[l - levels.lo] = std::pow(coeffs.level_norm(l), 2);
  return lepski_select(
    levels,
    [&](int j, int l) { return std::sqrt(energy.segment(j - levels.lo, l - j).sum()); }, C, n,
    coeffs.dim);
}

double smooth_clamp(double x, double inner_lo, double inner_hi, double outer_lo, double outer_hi)
{
  if (!(outer_lo < inner_lo) || !(inner_lo <= inner_hi) || !(inner_hi < outer_hi))
    throw std::invalid_argument("smooth_clamp needs outer_lo < inner_lo <= inner_hi < outer_hi");
  auto s = [](double t) { return t / std::sqrt(1.0 + t * t); };
  if (x < inner_lo) {
    const double w = inner_lo - outer_lo;
    return inner_lo - w * s((inner_lo - x) / w);
  }
  if (x > inner_hi) {
    const double w = outer_hi - inner_hi;
    return inner_hi + w * s((x - inner_hi) / w);
  }
  return x;
}

double smooth_clamp(double x, double B_L, double B_U)
{
  if (!(B_L > 0.0) || !(B_L <= B_U))
    throw std::invalid_argument("smooth_clamp needs 0 < B_L <= B_U");
  return smooth_clamp(x, B_L, B_U, 0.5 * B_L, 2.0 * B_U);
}

double regression_clamp(double x, double eps)
{
  if (!(eps > 0.0) || !(eps < 0.25))
    throw std::invalid_argument("regression clamp needs 0 < eps < 1/4");
  return smooth_clamp(x, 2.0 * eps, 1.0 - 2.0 * eps, eps, 1.0 - eps);
}

namespace {

// Shared evaluation of a clamped projection estimate.
template <class Clamp>
GridFunction materialize_clamped(const WaveletBasis& basis, const CoeffTree& coeffs, int level,
                                 int resolution, Interpretation interp, Clamp clamp)
{
  GridFunction g = synthesize(basis, coeffs, level, resolution, interp);
  g.values = g.values.unaryExpr(clamp);
  return g;
}

LevelRange small_sample_levels(const WaveletBasis& basis)
{
  return { basis.base_level(), basis.base_level() };
}

} // namespace

double AdaptiveDensityEstimate::raw(const WaveletBasis& basis, const PointRef& x) const
{
  return binreg::evaluate(basis, coeffs, selected_level, x);
}

double AdaptiveDensityEstimate::operator()(const WaveletBasis& basis, const PointRef& x) const
{
  return smooth_clamp(raw(basis, x), B_L, B_U);
}

Eigen::VectorXd AdaptiveDensityEstimate::evaluate(const WaveletBasis& basis,
                                                  const PointMatrix& points) const
{
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index i = 0; i < points.cols(); ++i)
    out[i] = (*this)(basis, points.col(i));
  return out;
}

GridFunction AdaptiveDensityEstimate::materialize(const WaveletBasis& basis, int resolution) const
{
  return materialize_clamped(basis, coeffs, selected_level, resolution,
                             Interpretation::generic,
                             [this](double v) { return smooth_clamp(v, B_L, B_U); });
}

AdaptiveDensityEstimate estimate_density(const PointMatrix& points, const ClassParams& params,
                                         const WaveletBasis& basis, double C_star)
{
  params.validate();
  if (points.cols() == 0)
    throw std::invalid_argument("density estimate from an empty sample");
  if (points.rows() != basis.dim())
    throw std::invalid_argument("points have the wrong dimension");
  const Eigen::Index n = points.cols();

  AdaptiveDensityEstimate est;
  est.levels = n >= 4 ? level_grids(n, basis.dim(), params, basis).density
                      : small_sample_levels(basis);
  est.coeffs =
    empirical_coefficients(basis, points, Eigen::VectorXd::Ones(n), est.levels.hi - 1);
  est.selected_level = lepski_select(est.coeffs, est.levels, C_star, n);
  est.B_L = params.B_L;
  est.B_U = params.B_U;
  est.lepski_const = C_star;
  est.n = n;
  return est;
}

double AdaptiveRegressionEstimate::raw(const WaveletBasis& basis, const PointRef& x) const
{
  return binreg::evaluate(basis, coeffs, selected_level, x);
}

double AdaptiveRegressionEstimate::operator()(const WaveletBasis& basis, const PointRef& x) const
{
  return regression_clamp(raw(basis, x), eps);
}

Eigen::VectorXd AdaptiveRegressionEstimate::evaluate(const WaveletBasis& basis,
                                                     const PointMatrix& points) const
{
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index i = 0; i < points.cols(); ++i)
    out[i] = (*this)(basis, points.col(i));
  return out;
}

GridFunction AdaptiveRegressionEstimate::materialize(const WaveletBasis& basis,
                                                     int resolution) const
{
  return materialize_clamped(basis, coeffs, selected_level, resolution,
                             Interpretation::regression,
                             [this](double v) { return regression_clamp(v, eps); });
}

AdaptiveRegressionEstimate estimate_regression(const Dataset& data,
                                               const AdaptiveDensityEstimate& density,
                                               const ClassParams& params,
                                               const WaveletBasis& basis, double C_starstar)
{
  params.require_estimation();
  if (data.size() == 0)
    throw std::invalid_argument("regression estimate from an empty sample");
  if (data.dim() != basis.dim())
    throw std::invalid_argument("dataset dimension does not match the basis");
  const Eigen::Index n = data.size();

  const Eigen::VectorXd ghat = density.evaluate(basis, data.x);
  if (!ghat.allFinite() || ghat.minCoeff() <= 0.0)
    throw std::runtime_error("design density estimate is not positive");
  const Eigen::VectorXd weights = data.y.cwiseQuotient(ghat);

  AdaptiveRegressionEstimate est;
  est.levels = n >= 4 ? level_grids(n, basis.dim(), params, basis).regression
                      : small_sample_levels(basis);
  est.coeffs = empirical_coefficients(basis, data.x, weights, est.levels.hi - 1);
  est.selected_level = lepski_select(est.coeffs, est.levels, C_starstar, n);
  est.lepski_const = C_starstar;
  est.n = n;
  return est;
}

RegressionFit estimate_regression(const Dataset& data, const ClassParams& params,
                                  const WaveletBasis& basis, double C_starstar, double C_star,
                                  std::optional<std::uint64_t> split_seed)
{
  if (data.size() < 2)
    throw std::invalid_argument("regression estimate needs at least two observations");
  const std::vector<Dataset> halves = split_dataset(data, 2, split_seed);
  RegressionFit fit;
  fit.density = estimate_density(halves[1].x, params, basis, C_star);
  fit.regression = estimate_regression(halves[0], fit.density, params, basis, C_starstar);
  fit.split_seed = split_seed;
  return fit;
}

int default_grid_resolution(const WaveletBasis& basis, const LevelRange& levels)
{
  return std::max(levels.hi, basis.base_level()) + 2;
}

} // namespace binreg
