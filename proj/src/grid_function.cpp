#include "binreg/grid_function.hpp"

#include <algorithm>
#include <stdexcept>

namespace binreg {

std::string to_string(Interpretation interpretation)
{
  switch (interpretation) {
    case Interpretation::density:
      return "density";
    case Interpretation::regression:
      return "regression";
    case Interpretation::generic:
      break;
  }
  return "generic";
}

Interpretation interpretation_from_string(const std::string& s)
{
  if (s == "density")
    return Interpretation::density;
  if (s == "regression")
    return Interpretation::regression;
  if (s == "generic")
    return Interpretation::generic;
  throw std::invalid_argument("unknown grid interpretation: " + s);
}

PointMatrix grid_nodes(int dim, int resolution)
{
  const Eigen::Index side = Eigen::Index{ 1 } << resolution;
  Eigen::Index total = 1;
  for (int i = 0; i < dim; ++i)
    total *= side;
  PointMatrix nodes(dim, total);
  const double h = std::ldexp(1.0, -resolution);
  for (Eigen::Index m = 0; m < total; ++m) {
    Eigen::Index rest = m;
    for (int i = 0; i < dim; ++i) {
      nodes(i, m) = (static_cast<double>(rest % side) + 0.5) * h;
      rest /= side;
    }
  }
  return nodes;
}

GridFunction GridFunction::from_function(int dim, int resolution,
                                         const std::function<double(const PointRef&)>& fn,
                                         Interpretation interpretation)
{
  if (dim < 1 || dim > kMaxDim || resolution < 0)
    throw std::invalid_argument("invalid grid shape");
  const PointMatrix nodes = grid_nodes(dim, resolution);
  GridFunction g{ dim, resolution, interpretation, Eigen::ArrayXd(nodes.cols()) };
  for (Eigen::Index m = 0; m < nodes.cols(); ++m)
    g.values[m] = fn(nodes.col(m));
  return g;
}

GridFunction GridFunction::constant(int dim, int resolution, double value,
                                    Interpretation interpretation)
{
  if (dim < 1 || dim > kMaxDim || resolution < 0)
    throw std::invalid_argument("invalid grid shape");
  return { dim, resolution, interpretation,
           Eigen::ArrayXd::Constant(Eigen::Index{ 1 } << (resolution * dim), value) };
}

double GridFunction::at(const PointRef& x) const
{
  const Eigen::Index side = Eigen::Index{ 1 } << resolution;
  Eigen::Index flat = 0, scale = 1;
  for (int i = 0; i < dim; ++i) {
    auto m = static_cast<Eigen::Index>(std::floor(std::ldexp(x[i], resolution)));
    m = std::clamp<Eigen::Index>(m, 0, side - 1);
    flat += scale * m;
    scale *= side;
  }
  return values[flat];
}

void check_compatible(const GridFunction& a, const GridFunction& b)
{
  if (a.dim != b.dim || a.resolution != b.resolution || a.size() != b.size())
    throw std::invalid_argument("grid mismatch: (d=" + std::to_string(a.dim) +
                                ", R=" + std::to_string(a.resolution) + ") vs (d=" +
                                std::to_string(b.dim) + ", R=" + std::to_string(b.resolution) +
                                ")");
}

double squared_l2_distance(const GridFunction& a, const GridFunction& b)
{
  check_compatible(a, b);
  return (a.values - b.values).square().sum() * a.cell_volume();
}

void check_density(const GridFunction& g, double tol)
{
  if (!g.values.allFinite())
    throw std::invalid_argument("density has non-finite values");
  if ((g.values < 0.0).any())
    throw std::invalid_argument("density has negative values");
  if (std::abs(g.integral() - 1.0) > tol)
    throw std::invalid_argument("density does not integrate to 1");
}

} // namespace binreg
