#pragma once

#include "binreg/dataset.hpp"
#include "binreg/estimators.hpp"
#include "binreg/gof.hpp"
#include "binreg/grid_function.hpp"
#include "binreg/wavelet_basis.hpp"

#include <vector>

namespace binreg {

//! Dyadic smoothness grid beta_j = 2^{j-1} beta_min, j = 1..N, with
//! N = ceil(log2(beta_max / beta_min)).
struct BetaGrid
{
  double beta_min = 0.0;
  double beta_max = 0.0;
  int N = 0;
  std::vector<double> levels;
};

//! Throws std::invalid_argument unless 0 < beta_min and beta_max > 2 beta_min.
BetaGrid beta_grid(double beta_min, double beta_max);

//! M* n^{-(2 beta/d)/(4 beta/d + 1)}.
double shell_radius(double n, double beta, int dim, double M_star);

struct ConfidenceConfig
{
  ClassParams params;
  double alpha = 0.1;
  double z_alpha = 0.0; //!< 0 selects 1 / alpha
  double C1 = 1.0;
  double C2 = 1.0;
  double slack_const = 1.0;
  double M_star = 1.0;
  //! Shell tests: cutoff constants of the composite test.
  double zeta = 1.0;
  double C_star = 0.0;
  //! Lepski constants for the design density and regression estimates.
  double lepski_density = 1.0;
  double lepski_regression = 1.0;
  //! Floor U_hat at zero before assembling the radius.
  bool floor_U = false;
  //! Resolution of the center grid; -1 selects the estimator default.
  int grid_resolution = -1;

  void validate() const;
  double z() const { return z_alpha > 0.0 ? z_alpha : 1.0 / alpha; }
};

struct SmoothnessSelection
{
  double beta_hat = 0.0;
  int index = 0; //!< 1-based grid index of beta_hat
  std::vector<TestOutcome> trace;
  double test_alpha = 0.0; //!< alpha / (4N) per test
};

//! Composite test configured for the shell step j (null beta_{j+1}, alternative beta_j).
CompositeTestConfig shell_test_config(const ConfidenceConfig& cfg, const BetaGrid& grid, int j);

//! Sequential shell tests j = 1..N-1 at level alpha/(4N), stopping at the
//! first rejection; beta_N when none rejects. Uses the given density estimate.
SmoothnessSelection select_smoothness(const Dataset& part, const AdaptiveDensityEstimate& density,
                                      const BetaGrid& grid, const ConfidenceConfig& cfg,
                                      const WaveletBasis& basis);

//! Variant that splits the part in halves and estimates the density itself.
SmoothnessSelection select_smoothness(const Dataset& part, const BetaGrid& grid,
                                      const ConfidenceConfig& cfg, const WaveletBasis& basis);

struct ConfidenceBall
{
  double beta_hat = 0.0;
  GridFunction center;
  double U_hat = 0.0;
  double deterministic_slack = 0.0;
  double z_alpha = 0.0;
  double tau_const_C1 = 0.0;
  double tau_const_C2 = 0.0;
  int j1 = 0;
  int dim = 1;
  Eigen::Index n = 0;
  SmoothnessSelection selection;
  int regression_level = 0;
  int density_level = 0;
  //! Center grid values outside [eps, 1 - eps] plus design density values
  //! on the third part outside [B_L / 2, 2 B_U].
  Eigen::Index clamp_violations = 0;

  //! tau_n(h)^2 = C1 dist2 / n + C2 2^{j1 d} / (n (n-1)) at dist2 = ||h - f_hat||^2.
  double tau_squared(double dist2) const;
  //! dist2 <= U_hat + slack + z tau_n.
  bool contains_distance(double dist2) const;
};

//! Three-way split: part 1 gives f_hat and beta_hat, part 2 the design
//! density estimate, part 3 the centered U-statistic at level j1.
//! Throws std::invalid_argument when a part has fewer than two observations.
ConfidenceBall build_confidence_ball(const Dataset& data, const ConfidenceConfig& cfg,
                                     const WaveletBasis& basis);

//! ||h - f_hat||^2 <= U_hat + slack + z tau_n(h) by grid quadrature.
//! Throws std::invalid_argument on a grid mismatch.
bool contains(const ConfidenceBall& ball, const GridFunction& h);

//! Largest r^2 with r^2 = U_hat + slack + z sqrt(C1 r^2 / n + C2 2^{j1 d} / (n (n-1))),
//! i.e. the squared radius of the membership region (0 if it is empty).
double radius_upper_bound(const ConfidenceBall& ball);

} // namespace binreg
