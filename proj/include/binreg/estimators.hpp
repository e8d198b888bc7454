#pragma once

#include "binreg/coeff_tree.hpp"
#include "binreg/dataset.hpp"
#include "binreg/grid_function.hpp"
#include "binreg/wavelet_basis.hpp"

#include <Eigen/Core>

#include <functional>
#include <map>
#include <optional>

namespace binreg {

//! Known constants of the model class: smoothness ranges of f (beta) and of
//! the design density g (gamma), Besov radii M (for f) and M_prime (for g),
//! and the bounds B_L <= g <= B_U.
struct ClassParams
{
  double beta_min = 0.5;
  double beta_max = 2.0;
  double gamma_min = 4.5;
  double gamma_max = 8.0;
  double M = 1.0;
  double M_prime = 1.0;
  double B_L = 0.5;
  double B_U = 2.0;

  //! Positivity and ordering; throws std::invalid_argument.
  void validate() const;
  //! Additionally gamma_min > beta_max.
  void require_estimation() const;
  //! Additionally gamma_min > 2 beta_max.
  void require_confidence() const;
};

//! Closed integer range of resolution levels.
struct LevelRange
{
  int lo = 0;
  int hi = 0;

  int count() const { return hi - lo + 1; }
  bool contains(int level) const { return level >= lo && level <= hi; }
};

//! T1 (regression levels) and T2 (density levels).
struct LevelGrids
{
  LevelRange regression;
  LevelRange density;
};

//! Largest l with 2^{l d} <= floor(q).
int dyadic_level(double q, int dim);

//! 2^{j_min d} = floor(n^{1/(2 beta_max/d + 1)}), 2^{j_max d} = floor(n^{1/(2 beta_min/d + 1)}),
//! and the same with gamma for the density levels, clamped to the basis range.
//! Throws std::invalid_argument when n < 4.
LevelGrids level_grids(Eigen::Index n, int dim, const ClassParams& params,
                       const WaveletBasis& basis);

//! g_l(x) = (1/n) sum_i K_{V_l}(x_i, x) on the grid of the given resolution
//! (default l + 2). Throws std::invalid_argument for an empty sample.
GridFunction density_candidate(const WaveletBasis& basis, const PointMatrix& points, int level,
                               int resolution = -1);

//! Lepski rule: the smallest j in the range with dist(j, l) <= C sqrt(2^{l d} / n)
//! for every l >= j in the range. The top level always qualifies.
int lepski_select(const LevelRange& levels, const std::function<double(int, int)>& distance,
                  double C, Eigen::Index n, int dim);

//! Same rule with grid L2 distances between materialized candidates.
//! Throws std::invalid_argument if the map is empty or not contiguous.
int lepski_select(const std::map<int, GridFunction>& candidates, double C, Eigen::Index n,
                  int dim);

//! Same rule on the nested projections of one coefficient tree, where
//! ||P_j - P_l||^2 is the energy of detail levels j..l-1 (Parseval).
int lepski_select(const CoeffTree& coeffs, const LevelRange& levels, double C, Eigen::Index n);

//! Smooth monotone map equal to x on [inner_lo, inner_hi] and taking values in
//! the open interval (outer_lo, outer_hi). Built from s(t) = t / sqrt(1 + t^2)
//! so the derivative is continuous with |slope| <= 1.
double smooth_clamp(double x, double inner_lo, double inner_hi, double outer_lo,
                    double outer_hi);

//! The density clamp: identity on [B_L, B_U], range (B_L / 2, 2 B_U).
double smooth_clamp(double x, double B_L, double B_U);

//! Probability clamp for regression estimates, range (eps, 1 - eps).
inline constexpr double kRegressionClampEps = 1e-3;
double regression_clamp(double x, double eps = kRegressionClampEps);

//! Adaptive projection density estimate g_hat = clamp(g_{l_hat}).
struct AdaptiveDensityEstimate
{
  int selected_level = 0;
  LevelRange levels;
  CoeffTree coeffs; //!< empirical coefficients, details up to levels.hi - 1
  double B_L = 0.0;
  double B_U = 0.0;
  double lepski_const = 0.0;
  Eigen::Index n = 0;

  double lower() const { return 0.5 * B_L; }
  double upper() const { return 2.0 * B_U; }

  //! Unclamped g_tilde(x).
  double raw(const WaveletBasis& basis, const PointRef& x) const;
  double operator()(const WaveletBasis& basis, const PointRef& x) const;
  Eigen::VectorXd evaluate(const WaveletBasis& basis, const PointMatrix& points) const;
  GridFunction materialize(const WaveletBasis& basis, int resolution) const;
};

//! Candidates over T2, Lepski selection with threshold C*, smooth clamp.
//! Level grids use n = number of points. A single point still yields a
//! valid estimate.
AdaptiveDensityEstimate estimate_density(const PointMatrix& points, const ClassParams& params,
                                         const WaveletBasis& basis, double C_star);

//! Plug-in regression estimate f_hat = clamp(f_{j_hat}) with
//! f_j = (1/n) sum_i y_i / g_hat(x_i) K_{V_j}(x_i, .).
struct AdaptiveRegressionEstimate
{
  int selected_level = 0;
  LevelRange levels;
  CoeffTree coeffs;
  double eps = kRegressionClampEps;
  double lepski_const = 0.0;
  Eigen::Index n = 0;

  double lower() const { return eps; }
  double upper() const { return 1.0 - eps; }

  double raw(const WaveletBasis& basis, const PointRef& x) const;
  double operator()(const WaveletBasis& basis, const PointRef& x) const;
  Eigen::VectorXd evaluate(const WaveletBasis& basis, const PointMatrix& points) const;
  GridFunction materialize(const WaveletBasis& basis, int resolution) const;
};

struct RegressionFit
{
  AdaptiveRegressionEstimate regression;
  AdaptiveDensityEstimate density;
  std::optional<std::uint64_t> split_seed;
};

//! f_hat from observations with a density estimate built elsewhere.
AdaptiveRegressionEstimate estimate_regression(const Dataset& data,
                                               const AdaptiveDensityEstimate& density,
                                               const ClassParams& params,
                                               const WaveletBasis& basis, double C_starstar);

//! Full pipeline: the first half of the (optionally shuffled) data builds
//! the f candidates, the second half the design density estimate.
//! Throws std::invalid_argument when fewer than two observations remain.
RegressionFit estimate_regression(const Dataset& data, const ClassParams& params,
                                  const WaveletBasis& basis, double C_starstar, double C_star,
                                  std::optional<std::uint64_t> split_seed = std::nullopt);

//! Grid resolution used to materialize estimates: top level + 2, at least
//! the basis base level + 2.
int default_grid_resolution(const WaveletBasis& basis, const LevelRange& levels);

} // namespace binreg
