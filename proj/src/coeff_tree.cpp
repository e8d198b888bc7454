#include "binreg/coeff_tree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace binreg {

CoeffTree CoeffTree::zeros(int dim, int base_level, int max_level)
{
  if (max_level < base_level - 1)
    throw std::invalid_argument("max_level below base_level - 1");
  CoeffTree t;
  t.dim = dim;
  t.base_level = base_level;
  t.max_level = max_level;
  t.scaling = Eigen::VectorXd::Zero(block_size(base_level, dim));
  const int nv = t.num_orientations();
  for (int l = base_level; l <= max_level; ++l)
    t.details.emplace_back(nv, Eigen::VectorXd::Zero(block_size(l, dim)));
  return t;
}

Eigen::VectorXd& CoeffTree::detail(int level, Orientation v)
{
  return details.at(level - base_level).at(v - 1);
}

const Eigen::VectorXd& CoeffTree::detail(int level, Orientation v) const
{
  return details.at(level - base_level).at(v - 1);
}

double CoeffTree::level_norm(int level) const
{
  double s = 0.0;
  for (const auto& block : details.at(level - base_level))
    s += block.squaredNorm();
  return std::sqrt(s);
}

double CoeffTree::squared_norm_below(int level) const
{
  double s = scaling.squaredNorm();
  for (int l = base_level; l < level && l <= max_level; ++l)
    for (const auto& block : details[l - base_level])
      s += block.squaredNorm();
  return s;
}

CoeffTree CoeffTree::truncated(int level) const
{
  CoeffTree t = *this;
  const int keep = std::clamp(level, base_level, max_level + 1) - base_level;
  t.details.resize(keep);
  t.max_level = base_level + keep - 1;
  return t;
}

void check_compatible(const CoeffTree& a, const CoeffTree& b)
{
  if (a.dim != b.dim || a.base_level != b.base_level || a.max_level != b.max_level)
    throw std::invalid_argument("coefficient trees have different shapes");
}

CoeffTree& CoeffTree::operator+=(const CoeffTree& other)
{
  check_compatible(*this, other);
  scaling += other.scaling;
  for (size_t l = 0; l < details.size(); ++l)
    for (size_t v = 0; v < details[l].size(); ++v)
      details[l][v] += other.details[l][v];
  return *this;
}

CoeffTree& CoeffTree::operator-=(const CoeffTree& other)
{
  return *this += -1.0 * other;
}

CoeffTree& CoeffTree::operator*=(double s)
{
  scaling *= s;
  for (auto& level : details)
    for (auto& block : level)
      block *= s;
  return *this;
}

CoeffTree operator+(CoeffTree a, const CoeffTree& b)
{
  return a += b;
}

CoeffTree operator-(CoeffTree a, const CoeffTree& b)
{
  return a -= b;
}

CoeffTree operator*(double s, CoeffTree a)
{
  return a *= s;
}

CoeffTree accumulate_coefficients(const WaveletBasis& basis, const PointMatrix& points,
                                  const Eigen::VectorXd& weights, int max_level)
{
  if (points.rows() != basis.dim())
    throw std::invalid_argument("points have the wrong dimension");
  if (points.cols() != weights.size())
    throw std::invalid_argument("points and weights differ in length");
  if (max_level > basis.max_level())
    throw std::out_of_range("max_level exceeds the basis range");
  const int j0 = basis.base_level();
  CoeffTree t = CoeffTree::zeros(basis.dim(), j0, max_level);
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const double w = weights[i];
    if (w == 0.0)
      continue;
    const auto x = points.col(i);
    for_each_active(basis, j0, x, Block::scaling,
                    [&](Orientation, Eigen::Index k, double value) { t.scaling[k] += w * value; });
    for (int l = j0; l <= max_level; ++l) {
      auto& level = t.details[l - j0];
      for_each_active(basis, l, x, Block::details, [&](Orientation v, Eigen::Index k, double value) {
        level[v - 1][k] += w * value;
      });
    }
  }
  return t;
}

CoeffTree empirical_coefficients(const WaveletBasis& basis, const PointMatrix& points,
                                 const Eigen::VectorXd& weights, int max_level)
{
  if (points.cols() == 0)
    throw std::invalid_argument("empty sample");
  CoeffTree t = accumulate_coefficients(basis, points, weights, max_level);
  t *= 1.0 / static_cast<double>(points.cols());
  return t;
}

CoeffTree analyze(const WaveletBasis& basis, const GridFunction& h, int max_level)
{
  if (h.dim != basis.dim())
    throw std::invalid_argument("grid dimension does not match the basis");
  if (max_level > h.resolution - 2)
    throw std::invalid_argument("grid resolution too coarse for max_level");
  const PointMatrix nodes = grid_nodes(h.dim, h.resolution);
  const Eigen::VectorXd weights = h.values.matrix() * h.cell_volume();
  return accumulate_coefficients(basis, nodes, weights, max_level);
}

double evaluate(const WaveletBasis& basis, const CoeffTree& coeffs, int level, const PointRef& x)
{
  if (level < coeffs.base_level || level > coeffs.max_level + 1)
    throw std::out_of_range("synthesis level outside the tree");
  double acc = 0.0;
  for_each_active(basis, coeffs.base_level, x, Block::scaling,
                  [&](Orientation, Eigen::Index k, double value) { acc += coeffs.scaling[k] * value; });
  for (int l = coeffs.base_level; l < level; ++l) {
    const auto& blocks = coeffs.details[l - coeffs.base_level];
    for_each_active(basis, l, x, Block::details, [&](Orientation v, Eigen::Index k, double value) {
      acc += blocks[v - 1][k] * value;
    });
  }
  return acc;
}

Eigen::VectorXd evaluate_points(const WaveletBasis& basis, const CoeffTree& coeffs, int level,
                                const PointMatrix& points)
{
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index i = 0; i < points.cols(); ++i)
    out[i] = evaluate(basis, coeffs, level, points.col(i));
  return out;
}

GridFunction synthesize(const WaveletBasis& basis, const CoeffTree& coeffs, int level,
                        int resolution, Interpretation interpretation)
{
  if (coeffs.dim != basis.dim())
    throw std::invalid_argument("tree dimension does not match the basis");
  const PointMatrix nodes = grid_nodes(coeffs.dim, resolution);
  GridFunction g{ coeffs.dim, resolution, interpretation, Eigen::ArrayXd(nodes.cols()) };
  for (Eigen::Index m = 0; m < nodes.cols(); ++m)
    g.values[m] = evaluate(basis, coeffs, level, nodes.col(m));
  return g;
}

double besov_norm(const CoeffTree& coeffs, double beta)
{
  double sup = 0.0;
  for (int l = coeffs.base_level; l <= coeffs.max_level; ++l)
    sup = std::max(sup, std::exp2(l * beta) * coeffs.level_norm(l));
  return std::exp2(coeffs.base_level * beta) * coeffs.scaling_norm() + sup;
}

double distance_to_besov_ball(const CoeffTree& coeffs, double beta, double radius)
{
  if (!(beta > 0.0) || !(radius > 0.0))
    throw std::invalid_argument("beta and radius must be positive");
  if (besov_norm(coeffs, beta) <= radius)
    return 0.0;

  // With a = 2^{J0 beta} ||s'|| the budget spent on the scaling block, every
  // detail block may keep norm (radius - a) 2^{-l beta}. The squared distance
  // F(a) is convex; its derivative is nondecreasing in a.
  const double s = coeffs.scaling_norm();
  const double w0 = std::exp2(-coeffs.base_level * beta);
  std::vector<std::pair<double, double>> blocks; // (norm, weight)
  for (int l = coeffs.base_level; l <= coeffs.max_level; ++l)
    blocks.emplace_back(coeffs.level_norm(l), std::exp2(-l * beta));

  auto objective = [&](double a) {
    double f = std::pow(std::max(0.0, s - a * w0), 2);
    for (const auto& [r, w] : blocks)
      f += std::pow(std::max(0.0, r - (radius - a) * w), 2);
    return f;
  };
  auto slope = [&](double a) {
    double g = -2.0 * w0 * std::max(0.0, s - a * w0);
    for (const auto& [r, w] : blocks)
      g += 2.0 * w * std::max(0.0, r - (radius - a) * w);
    return g;
  };

  double lo = 0.0, hi = radius;
  double best;
  if (slope(lo) >= 0.0) {
    best = lo;
  } else if (slope(hi) <= 0.0) {
    best = hi;
  } else {
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi)
        break;
      (slope(mid) < 0.0 ? lo : hi) = mid;
    }
    best = objective(lo) <= objective(hi) ? lo : hi;
  }
  return std::sqrt(objective(best));
}

} // namespace binreg
