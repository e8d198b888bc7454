#include "binreg/ustat.hpp"

#include <cmath>
#include <stdexcept>

namespace binreg {

void WeightedSample::validate() const
{
  if (points.cols() != weights.size())
    throw std::invalid_argument("points and weights differ in length");
  if (weights.size() < 2)
    throw std::invalid_argument("U-statistic needs n >= 2");
  if (!weights.allFinite() || weights.cwiseAbs().maxCoeff() > bound * (1.0 + 1e-12))
    throw std::invalid_argument("weight exceeds the declared bound");
}

LevelSums level_sums(const WaveletBasis& basis, const PointMatrix& points,
                     const Eigen::VectorXd& weights, int level, KernelKind kind)
{
  basis.check_level(level);
  if (points.rows() != basis.dim())
    throw std::invalid_argument("points have the wrong dimension");
  const Eigen::Index block = block_size(level, basis.dim());
  const Eigen::Index slots = kind == KernelKind::V ? 1 : (1 << basis.dim()) - 1;
  LevelSums sums{ Eigen::VectorXd::Zero(slots * block), Eigen::VectorXd::Zero(slots * block) };
  const Block which = kind == KernelKind::V ? Block::scaling : Block::details;
  const unsigned shift = kind == KernelKind::V ? 0u : 1u;

  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const double a = weights[i];
    if (a == 0.0)
      continue;
    for_each_active(basis, level, points.col(i), which,
                    [&](Orientation v, Eigen::Index k, double value) {
                      const Eigen::Index idx = (v - shift) * block + k;
                      const double t = a * value;
                      sums.linear[idx] += t;
                      sums.squares[idx] += t * t;
                    });
  }
  return sums;
}

double ustat_fast(const WaveletBasis& basis, const WeightedSample& ws, int level, KernelKind kind)
{
  ws.validate();
  const LevelSums sums = level_sums(basis, ws.points, ws.weights, level, kind);
  const double n = static_cast<double>(ws.size());
  return (sums.linear.squaredNorm() - sums.squares.sum()) / (n * (n - 1.0));
}

double ustat_bruteforce(const WaveletBasis& basis, const WeightedSample& ws, int level,
                        KernelKind kind)
{
  ws.validate();
  basis.check_level(level);
  const Eigen::Index n = ws.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double k = kind == KernelKind::V
                         ? kernel_v(basis, level, ws.points.col(i), ws.points.col(j))
                         : kernel_w(basis, level, ws.points.col(i), ws.points.col(j));
      acc += 2.0 * ws.weights[i] * ws.weights[j] * k;
    }
  const double nd = static_cast<double>(n);
  return acc / (nd * (nd - 1.0));
}

HoeffdingParts hoeffding_split(const WaveletBasis& basis, const WeightedSample& ws, int level,
                               KernelKind kind, const GridFunction& density,
                               const GridFunction& weight_mean)
{
  ws.validate();
  if (density.empty())
    throw std::invalid_argument("hoeffding_split needs a reference density");
  if (weight_mean.empty())
    throw std::invalid_argument("hoeffding_split needs the conditional weight mean");
  check_compatible(density, weight_mean);
  if (density.dim != basis.dim())
    throw std::invalid_argument("density grid dimension does not match the basis");

  const PointMatrix nodes = grid_nodes(density.dim, density.resolution);
  const Eigen::VectorXd quad =
    (weight_mean.values * density.values).matrix() * density.cell_volume();
  const Eigen::VectorXd mu = level_sums(basis, nodes, quad, level, kind).linear;

  // Centered terms e_i = c_i - mu are expanded around the raw sums of
  // c_i = a_i psi(x_i), so inactive functions cost nothing.
  const LevelSums sums = level_sums(basis, ws.points, ws.weights, level, kind);
  const double n = static_cast<double>(ws.size());

  HoeffdingParts parts;
  parts.mean = mu.squaredNorm();
  parts.linear = 2.0 / n * (mu.dot(sums.linear) - n * parts.mean);
  // sum_{i != j} e_i e_j = (sum e)^2 - sum e^2 with e_i = c_i - mu.
  const Eigen::VectorXd e_sum = sums.linear - n * mu;
  const Eigen::VectorXd e_sq = sums.squares - 2.0 * mu.cwiseProduct(sums.linear) +
                               n * mu.cwiseProduct(mu);
  parts.degenerate = (e_sum.squaredNorm() - e_sq.sum()) / (n * (n - 1.0));
  return parts;
}

TailParams tail_params(Eigen::Index n, int level, int dim)
{
  if (n < 2)
    throw std::invalid_argument("tail_params needs n >= 2");
  const double nd = static_cast<double>(n);
  const double dim_j = std::ldexp(1.0, level * dim);
  TailParams t;
  t.n = n;
  t.level = level;
  t.dim = dim;
  t.a1 = std::sqrt(dim_j) / (nd - 1.0);
  t.a2 = (std::sqrt(dim_j / nd) + 1.0) / (nd - 1.0);
  t.a3 = (std::sqrt(dim_j / nd) + dim_j / nd) / (nd - 1.0);
  return t;
}

} // namespace binreg
