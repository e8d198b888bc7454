#pragma once

#include "binreg/confidence.hpp"
#include "binreg/estimators.hpp"
#include "binreg/gof.hpp"
#include "binreg/models.hpp"
#include "binreg/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace binreg {

//! Runs fn(rep, rng, row) for rep = 0..reps-1 on up to `threads` workers.
//! Each replicate draws from its own stream keyed by (seed, rep) and writes
//! one row of the result, so the output does not depend on scheduling.
//! threads <= 0 selects the hardware concurrency.
Eigen::MatrixXd run_replicates(int reps, std::uint64_t seed, int threads, int columns,
                               const std::function<void(int, Rng&, Eigen::Ref<Eigen::RowVectorXd>)>& fn);

struct Summary
{
  std::string name;
  double value = 0.0;
  double se = 0.0;
};

//! Mean with standard error sd / sqrt(R).
Summary summarize_mean(const std::string& name, const Eigen::VectorXd& x);
//! Median whose standard error is half the width of the distribution-free
//! 95% interval [x_(R/2 - 0.98 sqrt R), x_(R/2 + 0.98 sqrt R)] divided by 1.96.
Summary summarize_median(const std::string& name, const Eigen::VectorXd& x);

struct SlopeFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

//! Least-squares slope of log(value) on log(n). With standard errors of the
//! values, the slope's standard error follows by the delta method and the
//! 95% interval is slope +- 1.96 se. Throws std::invalid_argument for fewer
//! than three distinct n or nonpositive values.
SlopeFit rate_slope(const std::vector<double>& ns, const std::vector<double>& values,
                    const std::vector<double>& value_ses = {});

struct ExperimentReport
{
  std::string name;
  std::uint64_t seed = 0;
  int reps = 0;
  std::vector<std::string> columns;
  Eigen::MatrixXd records;
  std::vector<Summary> summaries;
  std::vector<std::pair<std::string, SlopeFit>> slopes;
  std::vector<std::pair<std::string, double>> constants;

  //! Throws std::out_of_range if absent.
  const Summary& summary(const std::string& name) const;
  const SlopeFit& slope(const std::string& name) const;
};

class CalibrationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class TestKind { simple, composite };

struct TestSetup
{
  TestKind kind = TestKind::simple;
  SimpleTestConfig simple;
  CompositeTestConfig composite;
  ClassParams params;       //!< density estimate for the composite test
  double density_lepski = 1.0;
};

//! Model drawn per replicate (e.g. random signs of a bump alternative).
using ModelFactory = std::function<ModelSpec(Rng&)>;

//! Rejection frequency over reps datasets of size n. Records per replicate:
//! reject, the largest statistic-to-cutoff excess and every level statistic.
ExperimentReport mc_rejection_rate(const TestSetup& setup, const ModelFactory& models,
                                   Eigen::Index n, int reps, std::uint64_t seed,
                                   const WaveletBasis& basis, int threads = 1);
ExperimentReport mc_rejection_rate(const TestSetup& setup, const ModelSpec& model, Eigen::Index n,
                                   int reps, std::uint64_t seed, const WaveletBasis& basis,
                                   int threads = 1);

//! Confidence balls over reps datasets of size n: coverage of the true f,
//! squared radius, beta_hat and the ball components per replicate.
ExperimentReport mc_coverage(const ModelSpec& model, Eigen::Index n, int reps,
                             const ConfidenceConfig& cfg, std::uint64_t seed,
                             const WaveletBasis& basis, int threads = 1);

//! Median squared radius against n with its fitted slope ("radius").
ExperimentReport mc_radius_rate(const ModelSpec& model, const std::vector<Eigen::Index>& ns,
                                int reps, const ConfidenceConfig& cfg, std::uint64_t seed,
                                const WaveletBasis& basis, int threads = 1);

enum class RateTarget { density, regression };

struct RateSetup
{
  RateTarget target = RateTarget::density;
  ClassParams params;
  double lepski_density = 1.0;
  double lepski_regression = 1.0;
  int eval_resolution = 12;
};

//! Mean integrated squared error against n with its fitted slope ("mse").
//! Records clamp violations of g_hat / f_hat on the evaluation grid.
ExperimentReport mc_rate(const RateSetup& setup, const ModelSpec& model,
                         const std::vector<Eigen::Index>& ns, int reps, std::uint64_t seed,
                         const WaveletBasis& basis, int threads = 1);

// Alternatives used in power experiments.

//! Bump family at cell count k = 2^{(j0 - 2) d} with ||f - 1/2||^2 = D n^{-4 beta/(4 beta + d)},
//! random signs per replicate, uniform design.
ModelFactory simple_bump_alternatives(const SimpleTestConfig& cfg, Eigen::Index n, double D,
                                      const WaveletBasis& basis, int resolution = 12);

//! Bump family at k = 2^{(j0 - 2) d} scaled so that the distance from f to
//! B^{beta1}(M) equals sqrt(D n^{-4 beta2/(4 beta2 + d)}); n is the test half size.
//! Throws CalibrationError if the distance is out of reach inside (0, 1).
ModelFactory composite_bump_alternatives(const CompositeTestConfig& cfg, Eigen::Index n_half,
                                         double D, const WaveletBasis& basis,
                                         int resolution = 12);

//! Amplitude a of f = 1/2 + a sum_j lambda_j H_j(x) reaching the distance; exposed for tests.
double composite_bump_amplitude(const CompositeTestConfig& cfg, Eigen::Index n_half, double D,
                                int dim, int resolution = 12);

// Calibration of constants the theory leaves unspecified.

struct CalibrationResult
{
  std::string target;
  double value = 0.0;
  double achieved = 0.0; //!< size, power, agreement or coverage at value
  std::uint64_t seed = 0;
  int reps = 0;
  std::string panel_hash;
  std::vector<std::pair<std::string, double>> details;
};

std::string panel_hash(const std::vector<ModelSpec>& panel, Eigen::Index n);

//! Smallest C with empirical size <= alpha on every model of the panel.
CalibrationResult calibrate_simple(const std::vector<ModelSpec>& panel, Eigen::Index n,
                                   const SimpleTestConfig& cfg, int reps, std::uint64_t seed,
                                   const WaveletBasis& basis, int threads = 1);

//! Smallest zeta with empirical size <= alpha (cfg.alpha) on every model.
CalibrationResult calibrate_composite(const std::vector<ModelSpec>& panel, Eigen::Index n,
                                      const TestSetup& setup, int reps, std::uint64_t seed,
                                      const WaveletBasis& basis, int threads = 1);

//! Smallest separation constant D in [D_lo, D_hi] (log bisection, common
//! random numbers) with power >= target against the bump alternatives.
CalibrationResult calibrate_separation(const TestSetup& setup, Eigen::Index n,
                                       double target_power, int reps, std::uint64_t seed,
                                       const WaveletBasis& basis, double D_lo, double D_hi,
                                       int threads = 1);

//! Smallest Lepski constant on the grid whose selected level is within one
//! of the oracle level in at least `target` of the replicates on every model.
CalibrationResult calibrate_lepski(RateTarget target, const std::vector<ModelSpec>& panel,
                                   Eigen::Index n, const RateSetup& setup,
                                   const std::vector<double>& grid, double agreement, int reps,
                                   std::uint64_t seed, const WaveletBasis& basis,
                                   int threads = 1);

//! Smallest factor kappa = 2^{-m}, m = 0..max_halvings, applied to C1, C2 and
//! the slack constant such that coverage >= 1 - alpha on every model.
CalibrationResult calibrate_confidence(const std::vector<ModelSpec>& panel, Eigen::Index n,
                                       const ConfidenceConfig& cfg, int reps,
                                       std::uint64_t seed, const WaveletBasis& basis,
                                       int max_halvings = 12, int threads = 1);

} // namespace binreg
