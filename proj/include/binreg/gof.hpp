#pragma once

#include "binreg/dataset.hpp"
#include "binreg/estimators.hpp"
#include "binreg/wavelet_basis.hpp"

#include <string>
#include <utility>
#include <vector>

namespace binreg {

struct TestOutcome
{
  std::vector<int> levels;
  std::vector<double> statistics;
  std::vector<double> cutoffs;
  bool reject = false;
  int j0 = 0;
  int j0_formula = 0; //!< before clamping to the basis range
  Eigen::Index n = 0;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> constants;
};

//! H0: f = 1/2 against alternatives separated in L2.
struct SimpleTestConfig
{
  double beta = 1.0;
  double gamma = 2.0;
  double alpha = 0.1;
  double C = 1.0; //!< cutoff constant

  void validate() const;
};

//! H0: f in B^{beta1}(M) against alternatives of smoothness beta2 < beta1.
struct CompositeTestConfig
{
  double beta1 = 2.0;
  double beta2 = 1.0;
  double gamma_min = 4.5;
  double alpha = 0.1;
  double M = 1.0;
  double zeta = 1.0;
  double C_star = 0.0;     //!< design density error constant in the cutoff
  double B_L_prime = 0.25; //!< floor of the density estimate, B_L / 2

  void validate() const;
};

//! ceil(2 / (4 beta + d) log2 n).
int test_level(Eigen::Index n, double beta, int dim);

//! T = (1/(n(n-1))) sum_{i != j} (y_i - 1/2) K_{V_j0}(x_i, x_j) (y_j - 1/2), rejecting
//! when |T| > C 2^{j0 d / 2} / n. Throws std::invalid_argument for n < 2.
TestOutcome simple_null_test(const Dataset& data, const SimpleTestConfig& cfg,
                             const WaveletBasis& basis);

//! The cutoff (M 2^{-l beta1} + C*/B_L' n^{-gamma/(2 gamma + d)} + zeta 2^{(l + j0) d / 8} / sqrt(n))^2.
double composite_cutoff(const CompositeTestConfig& cfg, int level, int j0, Eigen::Index n,
                        int dim);

//! Multi-scale statistics T_n(l), l = J0..j0, with weights y_i / g_hat(x_i)
//! and kernel K_{W_l}, using a design density estimate built elsewhere.
TestOutcome composite_test(const Dataset& data, const AdaptiveDensityEstimate& density,
                           const CompositeTestConfig& cfg, const WaveletBasis& basis);

//! Splits the data in halves; the second half estimates the design density
//! (Lepski constant density_lepski, bounds from params).
TestOutcome composite_test(const Dataset& data, const CompositeTestConfig& cfg,
                           const ClassParams& params, double density_lepski,
                           const WaveletBasis& basis);

//! D n^{-4 beta / (4 beta + d)}.
double minimax_separation(double n, double beta, int dim, double D);

} // namespace binreg
