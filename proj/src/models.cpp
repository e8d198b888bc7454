#include "binreg/models.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace binreg {

namespace {

int check_resolution(int dim)
{
  return dim == 1 ? 10 : dim == 2 ? 6 : 4;
}

} // namespace

GridFunction ModelSpec::f_grid(int resolution) const
{
  return GridFunction::from_function(dim, resolution, f, Interpretation::regression);
}

GridFunction ModelSpec::g_grid(int resolution) const
{
  return GridFunction::from_function(dim, resolution, g, Interpretation::density);
}

void ModelSpec::validate(int resolution) const
{
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("model dimension must be in [1, 3]");
  if (!f || !g)
    throw std::invalid_argument("model needs both f and g");
  const GridFunction fg = f_grid(resolution);
  if (!fg.values.allFinite() || (fg.values <= 0.0).any() || (fg.values >= 1.0).any())
    throw std::invalid_argument("model f must lie strictly inside (0, 1)");
  const GridFunction gg = g_grid(resolution);
  check_density(gg, 1e-6);
  if ((gg.values <= 0.0).any())
    throw std::invalid_argument("model g must be positive");
  if (gg.values.maxCoeff() > g_upper)
    throw std::invalid_argument("model g exceeds its envelope");
}

PointFunction constant_function(double value)
{
  return [value](const PointRef&) { return value; };
}

PointFunction sine_function(double mean, double amplitude)
{
  return [=](const PointRef& x) { return mean + amplitude * std::sin(2.0 * std::numbers::pi * x[0]); };
}

PointFunction grid_lookup(GridFunction grid)
{
  return [grid = std::move(grid)](const PointRef& x) { return grid.at(x); };
}

PointFunction uniform_density()
{
  return constant_function(1.0);
}

PointFunction linear_density(double slope)
{
  if (!(std::abs(slope) < 2.0))
    throw std::invalid_argument("linear density needs |slope| < 2");
  return [slope](const PointRef& x) { return 1.0 + slope * (x[0] - 0.5); };
}

CoeffTree haar_series_coefficients(double beta, double amplitude, int first_level,
                                   int last_level, std::uint64_t seed)
{
  if (!(beta > 0.0) || first_level < 0 || last_level < first_level || last_level > 22)
    throw std::invalid_argument("invalid haar series levels");
  CoeffTree t = CoeffTree::zeros(1, 0, last_level);
  t.scaling[0] = 0.5;
  for (int l = first_level; l <= last_level; ++l) {
    Rng rng(seed, static_cast<std::uint64_t>(l));
    Eigen::VectorXd& block = t.detail(l, 1);
    const double c = amplitude * std::exp2(-l * beta) * std::exp2(-0.5 * l);
    for (Eigen::Index k = 0; k < block.size(); ++k)
      block[k] = c * rng.sign();
  }
  return t;
}

GridFunction haar_series_function(double beta, double amplitude, int first_level,
                                  int last_level, std::uint64_t seed)
{
  const CoeffTree t = haar_series_coefficients(beta, amplitude, first_level, last_level, seed);
  const int resolution = last_level + 1;
  const WaveletBasis haar = WaveletBasis::build(Family::haar, 1, 1, std::max(resolution + 1, 2));
  return synthesize(haar, t, last_level + 1, resolution, Interpretation::regression);
}

BumpProfile::BumpProfile(int dim, int reference_resolution)
  : dim_(dim)
{
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("bump dimension must be in [1, 3]");
  const int R = reference_resolution > 0 ? reference_resolution : (dim == 1 ? 14 : dim == 2 ? 8 : 5);
  const PointMatrix nodes = grid_nodes(dim, R);
  double mixed = 0.0, plain = 0.0;
  for (Eigen::Index m = 0; m < nodes.cols(); ++m) {
    mixed += raw(nodes.col(m), 0.0);
    double b = 1.0;
    for (int i = 0; i < dim; ++i) {
      const double t = nodes(i, m);
      b *= t > 0.0 && t < 0.5 ? std::exp(-1.0 / (t * (0.5 - t))) : 0.0;
    }
    plain += b;
  }
  shift_ = mixed / plain;
  double sq = 0.0;
  for (Eigen::Index m = 0; m < nodes.cols(); ++m)
    sq += std::pow(raw(nodes.col(m), shift_), 2);
  scale_ = 1.0 / std::sqrt(sq * std::ldexp(1.0, -R * dim));
}

double BumpProfile::raw(const PointRef& t, double shift) const
{
  double b = 1.0;
  for (int i = 0; i < dim_; ++i) {
    const double s = t[i];
    if (!(s > 0.0 && s < 0.5))
      return 0.0;
    b *= std::exp(-1.0 / (s * (0.5 - s)));
  }
  return b * (std::sin(4.0 * std::numbers::pi * t[0]) - shift);
}

double BumpProfile::operator()(const PointRef& t) const
{
  return scale_ * raw(t, shift_);
}

GridFunction make_bump_regression(int k, double beta, int dim, double eps,
                                  const std::vector<int>& lambda, int resolution)
{
  if (k < 1 || dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("bump family needs k >= 1 and d in [1, 3]");
  const int m = static_cast<int>(std::lround(std::pow(k, 1.0 / dim)));
  int km = 1;
  for (int i = 0; i < dim; ++i)
    km *= m;
  if (km != k)
    throw std::invalid_argument("k must be a d-th power of an integer");
  if (std::ldexp(1.0, resolution) < m)
    throw std::invalid_argument("grid too coarse for the bump tiling");
  if (static_cast<int>(lambda.size()) != k)
    throw std::invalid_argument("lambda must have k entries");

  const BumpProfile H(dim);
  const double amp = eps * std::pow(static_cast<double>(k), -beta / dim);
  GridFunction f = GridFunction::constant(dim, resolution, 0.5, Interpretation::regression);
  const PointMatrix nodes = grid_nodes(dim, resolution);
  Eigen::VectorXd t(dim);
  for (Eigen::Index g = 0; g < nodes.cols(); ++g) {
    int cell = 0, stride = 1;
    for (int i = 0; i < dim; ++i) {
      const double s = nodes(i, g) * m;
      const int c = std::min(static_cast<int>(std::floor(s)), m - 1);
      t[i] = s - c;
      cell += c * stride;
      stride *= m;
    }
    f.values[g] += amp * lambda[cell] * H(t);
  }
  if ((f.values <= 0.0).any() || (f.values >= 1.0).any())
    throw std::invalid_argument("bump amplitude pushes f outside (0, 1)");
  return f;
}

std::vector<int> random_signs(int k, Rng& rng)
{
  std::vector<int> s(k);
  for (int& v : s)
    v = rng.sign();
  return s;
}

Dataset sample_dataset(const ModelSpec& model, Eigen::Index n, Rng& rng)
{
  if (n < 0)
    throw std::invalid_argument("sample size must be nonnegative");
  model.validate(check_resolution(model.dim));
  Dataset data{ PointMatrix(model.dim, n), Eigen::VectorXd(n) };
  Eigen::VectorXd x(model.dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    while (true) {
      for (int j = 0; j < model.dim; ++j)
        x[j] = rng.uniform();
      const double gx = model.g(x);
      if (gx > model.g_upper)
        throw std::runtime_error("design density exceeds the sampling envelope");
      if (rng.uniform() * model.g_upper <= gx)
        break;
    }
    data.x.col(i) = x;
    data.y[i] = rng.bernoulli(model.f(x)) ? 1.0 : 0.0;
  }
  return data;
}

Dataset sample_dataset(const ModelSpec& model, Eigen::Index n, std::uint64_t seed)
{
  Rng rng(seed);
  return sample_dataset(model, n, rng);
}

} // namespace binreg
