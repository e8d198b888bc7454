#include "binreg/gof.hpp"

#include "binreg/ustat.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace binreg {

void SimpleTestConfig::validate() const
{
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(beta > 0.0) || !(gamma > beta))
    throw std::invalid_argument("simple test needs 0 < beta < gamma");
  if (!(C >= 0.0))
    throw std::invalid_argument("cutoff constant must be nonnegative");
}

void CompositeTestConfig::validate() const
{
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(beta2 > 0.0) || !(beta2 < beta1))
    throw std::invalid_argument("composite test needs 0 < beta2 < beta1");
  if (!(gamma_min > 2.0 * beta2))
    throw std::invalid_argument("composite test needs gamma_min > 2 beta2");
  if (!(M > 0.0) || !(zeta >= 0.0) || !(C_star >= 0.0) || !(B_L_prime > 0.0))
    throw std::invalid_argument("composite test constants out of range");
}

int test_level(Eigen::Index n, double beta, int dim)
{
  if (n < 2)
    throw std::invalid_argument("test level needs n >= 2");
  const double raw = 2.0 / (4.0 * beta + dim) * std::log2(static_cast<double>(n));
  // Exact integers (e.g. n = 1024, beta = 1) must not round up.
  return static_cast<int>(std::ceil(raw - 1e-12));
}

namespace {

int clamp_level(TestOutcome& out, int formula, const WaveletBasis& basis)
{
  out.j0_formula = formula;
  const int j0 = std::clamp(formula, basis.base_level(), basis.max_level());
  if (j0 != formula)
    out.warnings.push_back("j0 = " + std::to_string(formula) + " clamped to " +
                           std::to_string(j0) + " (basis range)");
  out.j0 = j0;
  return j0;
}

} // namespace

TestOutcome simple_null_test(const Dataset& data, const SimpleTestConfig& cfg,
                             const WaveletBasis& basis)
{
  cfg.validate();
  if (data.size() < 2)
    throw std::invalid_argument("simple test needs n >= 2");
  if (data.dim() != basis.dim())
    throw std::invalid_argument("dataset dimension does not match the basis");
  const Eigen::Index n = data.size();
  const int d = basis.dim();

  TestOutcome out;
  out.n = n;
  const int j0 = clamp_level(out, test_level(n, cfg.beta, d), basis);
  const WeightedSample ws{ data.x, data.y.array() - 0.5, 0.5 };
  const double T = ustat_fast(basis, ws, j0, KernelKind::V);
  const double cutoff = cfg.C * std::sqrt(std::ldexp(1.0, j0 * d)) / static_cast<double>(n);
  out.levels = { j0 };
  out.statistics = { T };
  out.cutoffs = { cutoff };
  out.reject = std::abs(T) > cutoff;
  out.constants = { { "C", cfg.C }, { "alpha", cfg.alpha }, { "beta", cfg.beta },
                    { "gamma", cfg.gamma } };
  return out;
}

double composite_cutoff(const CompositeTestConfig& cfg, int level, int j0, Eigen::Index n,
                        int dim)
{
  const double nd = static_cast<double>(n);
  const double g = cfg.gamma_min;
  const double term = cfg.M * std::exp2(-level * cfg.beta1) +
                      cfg.C_star / cfg.B_L_prime * std::pow(nd, -g / (2.0 * g + dim)) +
                      cfg.zeta * std::exp2((level + j0) * dim / 8.0) / std::sqrt(nd);
  return term * term;
}

TestOutcome composite_test(const Dataset& data, const AdaptiveDensityEstimate& density,
                           const CompositeTestConfig& cfg, const WaveletBasis& basis)
{
  cfg.validate();
  if (data.size() < 2)
    throw std::invalid_argument("composite test needs n >= 2 per half");
  if (data.dim() != basis.dim())
    throw std::invalid_argument("dataset dimension does not match the basis");
  const Eigen::Index n = data.size();
  const int d = basis.dim();

  TestOutcome out;
  out.n = n;
  const int j0 = clamp_level(out, test_level(n, cfg.beta2, d), basis);

  if (std::abs(cfg.B_L_prime - density.lower()) > 1e-12 * density.lower())
    out.warnings.push_back("B_L' in the cutoff differs from the density clamp floor");
  const Eigen::VectorXd ghat = density.evaluate(basis, data.x);
  const WeightedSample ws{ data.x, data.y.cwiseQuotient(ghat), 1.0 / density.lower() };
  for (int l = basis.base_level(); l <= j0; ++l) {
    const double T = ustat_fast(basis, ws, l, KernelKind::W);
    const double cutoff = composite_cutoff(cfg, l, j0, n, d);
    out.levels.push_back(l);
    out.statistics.push_back(T);
    out.cutoffs.push_back(cutoff);
    out.reject = out.reject || T > cutoff;
  }
  out.constants = { { "alpha", cfg.alpha },     { "beta1", cfg.beta1 },
                    { "beta2", cfg.beta2 },     { "gamma_min", cfg.gamma_min },
                    { "M", cfg.M },             { "zeta", cfg.zeta },
                    { "C_star", cfg.C_star },   { "B_L_prime", cfg.B_L_prime },
                    { "density_level", static_cast<double>(density.selected_level) } };
  return out;
}

TestOutcome composite_test(const Dataset& data, const CompositeTestConfig& cfg,
                           const ClassParams& params, double density_lepski,
                           const WaveletBasis& basis)
{
  const std::vector<Dataset> halves = split_dataset(data, 2);
  const AdaptiveDensityEstimate density =
    estimate_density(halves[1].x, params, basis, density_lepski);
  return composite_test(halves[0], density, cfg, basis);
}

double minimax_separation(double n, double beta, int dim, double D)
{
  if (!(n > 0.0) || !(beta > 0.0) || dim < 1 || !(D >= 0.0))
    throw std::invalid_argument("minimax_separation needs positive inputs");
  return D * std::pow(n, -4.0 * beta / (4.0 * beta + dim));
}

} // namespace binreg
