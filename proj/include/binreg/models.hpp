#pragma once

#include "binreg/coeff_tree.hpp"
#include "binreg/dataset.hpp"
#include "binreg/grid_function.hpp"
#include "binreg/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace binreg {

using PointFunction = std::function<double(const PointRef&)>;

//! Data generating model: regression function f and design density g on
//! [0,1]^d, with nominal smoothness labels and the sampling envelope B_U.
struct ModelSpec
{
  int dim = 1;
  std::string f_tag;
  std::string g_tag;
  PointFunction f;
  PointFunction g;
  double beta = 1.0;
  double gamma = 1.0;
  double g_upper = 1.0; //!< envelope, g <= g_upper

  GridFunction f_grid(int resolution) const;
  GridFunction g_grid(int resolution) const;

  //! 0 < f < 1 and 0 < g <= g_upper on the grid, integral of g within 1e-6
  //! of one. Throws std::invalid_argument otherwise.
  void validate(int resolution) const;
};

// Regression functions.
PointFunction constant_function(double value);
//! mean + amplitude sin(2 pi x_1).
PointFunction sine_function(double mean, double amplitude);
//! Nearest-cell lookup into a grid.
PointFunction grid_lookup(GridFunction grid);

// Design densities.
PointFunction uniform_density();
//! d = 1: 1 + slope (x - 1/2), a Lipschitz density for |slope| < 2.
PointFunction linear_density(double slope);

//! Coefficients of 1/2 + sum_{l = first..last} sum_k c_{l,k} psi_{l,k}
//! (d = 1, haar) with every detail block of norm amplitude 2^{-l beta}; the
//! signs come from the seed.
CoeffTree haar_series_coefficients(double beta, double amplitude, int first_level,
                                   int last_level, std::uint64_t seed);
//! The same function as a grid at resolution last_level + 1 (exact).
GridFunction haar_series_function(double beta, double amplitude, int first_level,
                                  int last_level, std::uint64_t seed);

//! Smooth profile H supported in [0, 1/2]^d: a product of bumps
//! exp(-1 / (t (1/2 - t))) times sin(4 pi t_1), centered with a multiple of
//! the bump and normalized to unit L2 norm on the reference grid.
class BumpProfile
{
public:
  explicit BumpProfile(int dim, int reference_resolution = -1);

  int dim() const { return dim_; }
  double operator()(const PointRef& t) const;

private:
  double raw(const PointRef& t, double shift) const;

  int dim_ = 1;
  double shift_ = 0.0;
  double scale_ = 1.0;
};

//! f = 1/2 + eps k^{-beta/d} sum_j lambda_j H(k^{1/d} (x - x_j)) over the
//! regular tiling of [0,1]^d by k cubes, on a grid of the given resolution.
//! Throws std::invalid_argument if k is not a d-th power of an integer no finer than
//! the grid, lambda has the wrong length or f leaves (0, 1).
GridFunction make_bump_regression(int k, double beta, int dim, double eps,
                                  const std::vector<int>& lambda, int resolution);

//! Random sign vector of length k.
std::vector<int> random_signs(int k, Rng& rng);

//! x_i ~ g by rejection under the uniform g_upper envelope, y_i ~ Bernoulli(f(x_i)).
Dataset sample_dataset(const ModelSpec& model, Eigen::Index n, Rng& rng);
Dataset sample_dataset(const ModelSpec& model, Eigen::Index n, std::uint64_t seed);

} // namespace binreg
