#pragma once

#include "binreg/wavelet_basis.hpp"

#include <Eigen/Core>

#include <functional>
#include <string>

namespace binreg {

enum class Interpretation { density, regression, generic };

std::string to_string(Interpretation interpretation);
Interpretation interpretation_from_string(const std::string& s);

//! Function sampled at the cell midpoints (m + 1/2) 2^-R of the dyadic grid
//! on [0,1]^d. Flat index m = sum_i m_i 2^{R i}.
struct GridFunction
{
  int dim = 1;
  int resolution = 0;
  Interpretation interpretation = Interpretation::generic;
  Eigen::ArrayXd values;

  static GridFunction from_function(int dim, int resolution,
                                    const std::function<double(const PointRef&)>& fn,
                                    Interpretation interpretation = Interpretation::generic);
  static GridFunction constant(int dim, int resolution, double value,
                               Interpretation interpretation = Interpretation::generic);

  Eigen::Index size() const { return values.size(); }
  bool empty() const { return values.size() == 0; }
  double cell_volume() const { return std::ldexp(1.0, -resolution * dim); }

  //! Midpoint quadrature of the integral over [0,1]^d.
  double integral() const { return values.sum() * cell_volume(); }
  double squared_l2_norm() const { return values.square().sum() * cell_volume(); }

  //! Nearest-cell lookup; x outside [0,1] is clamped to the boundary cell.
  double at(const PointRef& x) const;
};

//! d x 2^{Rd} matrix of grid midpoints in flat-index order.
PointMatrix grid_nodes(int dim, int resolution);

void check_compatible(const GridFunction& a, const GridFunction& b);

//! Grid-quadrature ||a - b||_2^2; throws std::invalid_argument on grid mismatch.
double squared_l2_distance(const GridFunction& a, const GridFunction& b);

//! Validates the density invariant: finite, nonnegative, integral within tol of 1.
void check_density(const GridFunction& g, double tol = 1e-6);

} // namespace binreg
