#pragma once

#include "binreg/grid_function.hpp"
#include "binreg/wavelet_basis.hpp"

#include <Eigen/Core>

#include <vector>

namespace binreg {

//! Wavelet coefficients of one function: the scaling block at the base level
//! J0 and detail blocks for levels J0..max_level, one vector of 2^{ld}
//! entries per orientation v != 0.
//!
//! Level convention used throughout the library: the "level-j space" is the
//! span of the scaling functions at level j, i.e. the scaling block plus the
//! detail levels J0..j-1. A tree with max_level = J0 - 1 holds no details.
struct CoeffTree
{
  int dim = 1;
  int base_level = 0;
  int max_level = -1;
  Eigen::VectorXd scaling;
  std::vector<std::vector<Eigen::VectorXd>> details; // [level - base_level][v - 1]

  static CoeffTree zeros(int dim, int base_level, int max_level);

  int num_orientations() const { return (1 << dim) - 1; }
  Eigen::VectorXd& detail(int level, Orientation v);
  const Eigen::VectorXd& detail(int level, Orientation v) const;

  //! (sum_{k,v} coef^2)^{1/2} over the level-l detail block.
  double level_norm(int level) const;
  double scaling_norm() const { return scaling.norm(); }

  //! Squared l2 norm of everything in the level-j space (Parseval).
  double squared_norm_below(int level) const;

  //! Copy holding only the detail levels < level.
  CoeffTree truncated(int level) const;

  CoeffTree& operator+=(const CoeffTree& other);
  CoeffTree& operator-=(const CoeffTree& other);
  CoeffTree& operator*=(double s);
};

CoeffTree operator+(CoeffTree a, const CoeffTree& b);
CoeffTree operator-(CoeffTree a, const CoeffTree& b);
CoeffTree operator*(double s, CoeffTree a);

void check_compatible(const CoeffTree& a, const CoeffTree& b);

//! Raw sums sum_i w_i psi_lambda(x_i) for the scaling block and detail
//! levels up to max_level. points is d x n, weights has n entries.
CoeffTree accumulate_coefficients(const WaveletBasis& basis, const PointMatrix& points,
                                  const Eigen::VectorXd& weights, int max_level);

//! Empirical coefficients (1/n) sum_i w_i psi_lambda(x_i). With unit weights
//! these are the coefficients of the projection density estimator.
CoeffTree empirical_coefficients(const WaveletBasis& basis, const PointMatrix& points,
                                 const Eigen::VectorXd& weights, int max_level);

//! Grid-quadrature coefficients <h, psi_lambda> ~ 2^{-R d} sum h(node) psi(node).
//! Throws std::invalid_argument when max_level > h.resolution - 2 or the
//! dimensions disagree.
CoeffTree analyze(const WaveletBasis& basis, const GridFunction& h, int max_level);

//! Projection onto the level-j space evaluated on a grid of the given
//! resolution. Requires base_level <= level <= coeffs.max_level + 1.
GridFunction synthesize(const WaveletBasis& basis, const CoeffTree& coeffs, int level,
                        int resolution, Interpretation interpretation = Interpretation::generic);

//! Same projection evaluated at arbitrary points.
double evaluate(const WaveletBasis& basis, const CoeffTree& coeffs, int level, const PointRef& x);
Eigen::VectorXd evaluate_points(const WaveletBasis& basis, const CoeffTree& coeffs, int level,
                                const PointMatrix& points);

//! 2^{J0 beta} ||scaling||_2 + max_l 2^{l beta} ||detail_l||_2, the sup taken
//! over the levels present in the tree only.
double besov_norm(const CoeffTree& coeffs, double beta);

//! L2 distance from the tree to the Besov ball {besov_norm <= radius},
//! restricted to resolved levels. The nearest point shrinks every block
//! radially; the split of the radius between the scaling term and the
//! detail sup is found by a one-dimensional convex search.
double distance_to_besov_ball(const CoeffTree& coeffs, double beta, double radius);

} // namespace binreg
