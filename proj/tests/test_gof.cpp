#include "binreg/gof.hpp"
#include "binreg/models.hpp"

#include <doctest.h>

#include <cmath>

using namespace binreg;

namespace {

Dataset uniform_data(Eigen::Index n, double p, std::uint64_t seed)
{
  ModelSpec m;
  m.f = constant_function(p);
  m.g = uniform_density();
  return sample_dataset(m, n, seed);
}

} // namespace

TEST_CASE("test level")
{
  CHECK(test_level(1024, 1.0, 1) == 4);
  CHECK(test_level(1025, 1.0, 1) == 5);
  CHECK(test_level(4096, 2.0, 1) == 3);
  CHECK(test_level(1000, 1.0, 2) == 4);
  CHECK_THROWS_AS(test_level(1, 1.0, 1), std::invalid_argument);
}

TEST_CASE("simple statistic on a hand example")
{
  // Four observations at one point with alternating labels:
  // sum_{i != j} a_i a_j = (sum a)^2 - sum a^2 = -1, so T = -K / 12.
  const WaveletBasis b = WaveletBasis::build(Family::haar, 1, 1, 12);
  Dataset data{ PointMatrix::Constant(1, 4, 0.3), Eigen::VectorXd(4) };
  data.y << 0, 1, 0, 1;
  SimpleTestConfig cfg;
  cfg.beta = 0.25; // j0 = ceil(2/2 * log2 4) = 2
  cfg.C = 1.0;
  const TestOutcome out = simple_null_test(data, cfg, b);
  REQUIRE(out.j0 == 2);
  CHECK(out.statistics[0] == doctest::Approx(-4.0 / 12.0).epsilon(1e-14));
  CHECK(out.cutoffs[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_FALSE(out.reject);
  cfg.C = 0.7; // cutoff 0.35 > 1/3
  CHECK(simple_null_test(data, cfg, b).reject == false);
  cfg.C = 0.6; // cutoff 0.3 < 1/3
  CHECK(simple_null_test(data, cfg, b).reject);
}

TEST_CASE("simple test is symmetric under label flips")
{
  const WaveletBasis b = WaveletBasis::build(Family::haar, 1, 1, 12);
  SimpleTestConfig cfg;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Dataset data = uniform_data(500, 0.5, seed);
    const TestOutcome a = simple_null_test(data, cfg, b);
    data.y = Eigen::VectorXd::Ones(data.size()) - data.y;
    const TestOutcome c = simple_null_test(data, cfg, b);
    CHECK(a.statistics[0] == doctest::Approx(c.statistics[0]).epsilon(1e-12));
    CHECK(a.reject == c.reject);
  }
}

TEST_CASE("simple test detects a shifted mean")
{
  const WaveletBasis b = WaveletBasis::build(Family::haar, 1, 1, 12);
  SimpleTestConfig cfg;
  cfg.C = 2.0;
  const TestOutcome out = simple_null_test(uniform_data(2000, 0.7, 3), cfg, b);
  // E T = ||f - 1/2||^2 = 0.04 for a constant shift.
  CHECK(out.statistics[0] == doctest::Approx(0.04).epsilon(0.3));
  CHECK(out.reject);
}

TEST_CASE("level clamping produces a warning")
{
  const WaveletBasis b = WaveletBasis::build(Family::haar, 1, 1, 6);
  SimpleTestConfig cfg;
  cfg.beta = 0.1; // j0 formula far above max_level 4
  const TestOutcome out = simple_null_test(uniform_data(5000, 0.5, 2), cfg, b);
  CHECK(out.j0 == b.max_level());
  CHECK(out.j0_formula > b.max_level());
  CHECK(out.warnings.size() == 1);
}

TEST_CASE("composite cutoff arithmetic")
{
  CompositeTestConfig cfg;
  cfg.M = 1.0;
  cfg.beta1 = 1.0;
  cfg.beta2 = 0.5;
  cfg.gamma_min = 3.0;
  cfg.C_star = 0.25;
  cfg.B_L_prime = 0.25;
  cfg.zeta = 1.0;
  const double expect = std::pow(0.25 + std::pow(1024.0, -3.0 / 7.0) + std::pow(2.0, 0.75) / 32.0, 2);
  CHECK(composite_cutoff(cfg, 2, 4, 1024, 1) == doctest::Approx(expect).epsilon(1e-14));

  double prev = composite_cutoff(cfg, 2, 4, 1024, 1);
  cfg.zeta = 2.0;
  CHECK(composite_cutoff(cfg, 2, 4, 1024, 1) > prev);
}

TEST_CASE("composite test")
{
  const WaveletBasis b = WaveletBasis::build(Family::haar, 1, 1, 12);
  ClassParams params;
  params.gamma_min = 4.5;
  params.gamma_max = 8.0;
  CompositeTestConfig cfg;
  cfg.gamma_min = 4.5;
  cfg.B_L_prime = params.B_L / 2.0;

  SUBCASE("all labels zero accept")
  {
    Dataset data = uniform_data(1000, 0.5, 8);
    data.y.setZero();
    const TestOutcome out = composite_test(data, cfg, params, 1.0, b);
    CHECK_FALSE(out.reject);
    for (double t : out.statistics)
      CHECK(t == 0.0);
  }

  SUBCASE("one statistic per level")
  {
    const Dataset data = uniform_data(2048, 0.5, 9);
    const TestOutcome out = composite_test(data, cfg, params, 1.0, b);
    const int j0 = test_level(1024, cfg.beta2, 1);
    CHECK(out.j0 == j0);
    CHECK(out.levels.size() == static_cast<std::size_t>(j0 - b.base_level() + 1));
    CHECK(out.levels.front() == b.base_level());
    CHECK(out.statistics.size() == out.cutoffs.size());
    for (std::size_t i = 1; i < out.cutoffs.size(); ++i)
      CHECK(out.cutoffs[i] != out.cutoffs[i - 1]);
  }

  SUBCASE("larger cutoffs never turn acceptance into rejection")
  {
    const Dataset data = uniform_data(2000, 0.5, 10);
    bool prev = true;
    for (double zeta : { 0.0, 0.1, 0.5, 1.0, 4.0 }) {
      cfg.zeta = zeta;
      const bool r = composite_test(data, cfg, params, 1.0, b).reject;
      CHECK((prev || !r));
      prev = r;
    }
  }

  SUBCASE("validation")
  {
    cfg.beta2 = 3.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.beta2 = 1.0;
    cfg.gamma_min = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
}

TEST_CASE("minimax separation")
{
  CHECK(minimax_separation(1024.0, 1.0, 1, 1.0) == doctest::Approx(0.00390625).epsilon(1e-14));
  CHECK(minimax_separation(1024.0, 1.0, 1, 2.0) ==
        doctest::Approx(2.0 * 0.00390625).epsilon(1e-14));
  CHECK(minimax_separation(2048.0, 1.0, 1, 1.0) < minimax_separation(1024.0, 1.0, 1, 1.0));
  CHECK_THROWS_AS(minimax_separation(0.0, 1.0, 1, 1.0), std::invalid_argument);
}
