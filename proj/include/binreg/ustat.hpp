#pragma once

#include "binreg/grid_function.hpp"
#include "binreg/wavelet_basis.hpp"

#include <Eigen/Core>

namespace binreg {

//! Which projection kernel sandwiches the weights: the scaling space V_j or
//! the detail space W_j.
enum class KernelKind { V, W };

//! Points x_i (d x n) with per-observation factors a_i, |a_i| <= bound.
struct WeightedSample
{
  PointMatrix points;
  Eigen::VectorXd weights;
  double bound = 1.0;

  Eigen::Index size() const { return weights.size(); }

  //! Throws std::invalid_argument if n < 2, the lengths disagree or some
  //! |a_i| exceeds the bound.
  void validate() const;
};

//! Per-basis-function sums at one level: sum_i a_i psi_lambda(x_i) and
//! sum_i a_i^2 psi_lambda(x_i)^2, flattened as (v_slot * 2^{jd} + k).
struct LevelSums
{
  Eigen::VectorXd linear;
  Eigen::VectorXd squares;
};

LevelSums level_sums(const WaveletBasis& basis, const PointMatrix& points,
                     const Eigen::VectorXd& weights, int level, KernelKind kind);

//! (1/(n(n-1))) sum_{i != j} a_i K(x_i, x_j) a_j through the coefficient
//! identity sum_lambda [(sum_i a_i psi)^2 - sum_i a_i^2 psi^2]. O(n) per level.
double ustat_fast(const WaveletBasis& basis, const WeightedSample& ws, int level, KernelKind kind);

//! Literal O(n^2) double sum over kernel_v / kernel_w. Test oracle.
double ustat_bruteforce(const WaveletBasis& basis, const WeightedSample& ws, int level,
                        KernelKind kind);

//! Hoeffding decomposition U = mean + linear + degenerate, where
//! mean = sum_lambda mu_lambda^2 with mu_lambda = E[a psi_lambda(x)],
//! linear = (2/n) sum_i sum_lambda mu_lambda (a_i psi_lambda(x_i) - mu_lambda)
//! and degenerate is the U-statistic of the centered terms.
struct HoeffdingParts
{
  double linear = 0.0;
  double degenerate = 0.0;
  double mean = 0.0;

  double total() const { return linear + degenerate + mean; }
};

//! mu_lambda is computed by grid quadrature of weight_mean(x) psi_lambda(x)
//! density(x), where weight_mean(x) = E[a | x]. Throws std::invalid_argument
//! when the density is missing (empty) or the grids disagree.
HoeffdingParts hoeffding_split(const WaveletBasis& basis, const WeightedSample& ws, int level,
                               KernelKind kind, const GridFunction& density,
                               const GridFunction& weight_mean);

//! Scale parameters of the U-statistic tail bound.
struct TailParams
{
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  Eigen::Index n = 0;
  int level = 0;
  int dim = 1;
};

TailParams tail_params(Eigen::Index n, int level, int dim);

} // namespace binreg
