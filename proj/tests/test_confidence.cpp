#include "binreg/confidence.hpp"
#include "binreg/models.hpp"

#include <doctest.h>

#include <cmath>

using namespace binreg;

namespace {

ConfidenceBall manual_ball(double U, double slack, double z, double C1, double C2, Eigen::Index n,
                           int j1)
{
  ConfidenceBall b;
  b.U_hat = U;
  b.deterministic_slack = slack;
  b.z_alpha = z;
  b.tau_const_C1 = C1;
  b.tau_const_C2 = C2;
  b.n = n;
  b.j1 = j1;
  b.dim = 1;
  return b;
}

Dataset sine_data(Eigen::Index n, std::uint64_t seed)
{
  ModelSpec m;
  m.f = sine_function(0.5, 0.3);
  m.g = uniform_density();
  return sample_dataset(m, n, seed);
}

ConfidenceConfig default_config()
{
  ConfidenceConfig cfg;
  cfg.params.beta_min = 1.0;
  cfg.params.beta_max = 2.01;
  cfg.params.gamma_min = 4.5;
  cfg.params.gamma_max = 8.0;
  cfg.params.M = 0.8;
  return cfg;
}

} // namespace

TEST_CASE("beta grid")
{
  const BetaGrid a = beta_grid(0.5, 4.0);
  CHECK(a.N == 3);
  REQUIRE(a.levels.size() == 3);
  CHECK(a.levels[0] == 0.5);
  CHECK(a.levels[1] == 1.0);
  CHECK(a.levels[2] == 2.0);

  const BetaGrid b = beta_grid(1.0, 2.01);
  CHECK(b.N == 2);
  CHECK(b.levels == std::vector<double>{ 1.0, 2.0 });

  CHECK_THROWS_AS(beta_grid(1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(beta_grid(0.0, 3.0), std::invalid_argument);
}

TEST_CASE("shell radius")
{
  CHECK(shell_radius(1024.0, 1.0, 1, 1.0) == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(shell_radius(1024.0, 1.0, 1, 3.0) == doctest::Approx(0.1875).epsilon(1e-14));
  // Only beta / d enters.
  CHECK(shell_radius(500.0, 2.0, 2, 1.0) == doctest::Approx(shell_radius(500.0, 1.0, 1, 1.0)));
  CHECK_THROWS_AS(shell_radius(10.0, 1.0, 1, 0.0), std::invalid_argument);
}

TEST_CASE("membership by distance")
{
  // tau^2 = C2 2^0 / (2 * 1) = 1e-6, threshold 0.01 + 0.002 + 10 * 0.001 = 0.022.
  const ConfidenceBall b = manual_ball(0.01, 0.002, 10.0, 0.0, 2e-6, 2, 0);
  CHECK(b.tau_squared(0.5) == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(b.contains_distance(0.02));
  CHECK(b.contains_distance(0.0219));
  CHECK_FALSE(b.contains_distance(0.0221));
  CHECK(radius_upper_bound(b) == doctest::Approx(0.022).epsilon(1e-12));
}

TEST_CASE("radius closed form")
{
  const Eigen::Index n = 1000;
  const int j1 = 4;
  const double C2 = 2.5;
  const double z = 20.0;
  const ConfidenceBall b = manual_ball(0.0, 0.0, z, 0.0, C2, n, j1);
  const double expect = z * std::sqrt(C2 * 16.0 / (1000.0 * 999.0));
  CHECK(radius_upper_bound(b) == doctest::Approx(expect).epsilon(1e-12));

  // General case: the radius solves the boundary equation and is the edge of membership.
  ConfidenceBall c = manual_ball(0.003, 0.001, 10.0, 1.5, 2.0, n, j1);
  const double r2 = radius_upper_bound(c);
  CHECK(r2 - c.U_hat - c.deterministic_slack ==
        doctest::Approx(c.z_alpha * std::sqrt(c.tau_squared(r2))).epsilon(1e-10));
  CHECK(c.contains_distance(r2 * (1.0 - 1e-9)));
  CHECK_FALSE(c.contains_distance(r2 * (1.0 + 1e-9)));

  double prev = 0.0;
  for (double U : { -0.01, -0.001, 0.0, 0.002, 0.01 }) {
    c.U_hat = U;
    const double r = radius_upper_bound(c);
    CHECK(r >= prev);
    prev = r;
  }
  c.U_hat = -1.0;
  CHECK(radius_upper_bound(c) == 0.0);
}

TEST_CASE("membership depends only on the distance to the center")
{
  ConfidenceBall b = manual_ball(0.004, 0.0, 10.0, 1.0, 1.0, 500, 3);
  b.center = GridFunction::constant(1, 8, 0.5);
  const GridFunction up = GridFunction::constant(1, 8, 0.55);
  const GridFunction down = GridFunction::constant(1, 8, 0.45);
  CHECK(contains(b, up) == contains(b, down));
  CHECK(contains(b, up) == b.contains_distance(0.0025));
  CHECK_THROWS_AS(contains(b, GridFunction::constant(1, 7, 0.5)), std::invalid_argument);
}

TEST_CASE("shell test configuration")
{
  const ConfidenceConfig cfg = default_config();
  const BetaGrid grid = beta_grid(0.5, 4.0);
  const CompositeTestConfig t = shell_test_config(cfg, grid, 2);
  CHECK(t.beta1 == 2.0);
  CHECK(t.beta2 == 1.0);
  CHECK(t.alpha == doctest::Approx(cfg.alpha / 12.0));
  CHECK(t.B_L_prime == 0.5 * cfg.params.B_L);
  CHECK_THROWS_AS(shell_test_config(cfg, grid, 3), std::out_of_range);
  CHECK_THROWS_AS(shell_test_config(cfg, grid, 0), std::out_of_range);
}

TEST_CASE("smoothness selection stops at the first rejection")
{
  ConfidenceConfig cfg = default_config();
  cfg.params.beta_min = 0.5;
  cfg.params.beta_max = 2.0;
  const BetaGrid grid = beta_grid(0.5, 4.0);
  const WaveletBasis basis = WaveletBasis::build(Family::haar, 1, 1, 12);

  for (double zeta : { 0.0, 0.05, 100.0 }) {
    cfg.zeta = zeta;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const SmoothnessSelection s = select_smoothness(sine_data(1200, seed), grid, cfg, basis);
      CHECK(s.test_alpha == doctest::Approx(cfg.alpha / 12.0));
      REQUIRE(!s.trace.empty());
      for (std::size_t i = 0; i + 1 < s.trace.size(); ++i)
        CHECK_FALSE(s.trace[i].reject);
      if (s.index < grid.N) {
        CHECK(s.trace.back().reject);
        CHECK(s.trace.size() == static_cast<std::size_t>(s.index));
      } else {
        CHECK(s.trace.size() == static_cast<std::size_t>(grid.N - 1));
        CHECK_FALSE(s.trace.back().reject);
      }
      CHECK(s.beta_hat == grid.levels[s.index - 1]);
    }
  }
  cfg.zeta = 100.0;
  CHECK(select_smoothness(sine_data(1200, 9), grid, cfg, basis).beta_hat == 2.0);
}

TEST_CASE("confidence ball assembly")
{
  const WaveletBasis basis = WaveletBasis::build(Family::haar, 1, 1, 12);
  ConfidenceConfig cfg = default_config();
  cfg.grid_resolution = 10;
  const Dataset data = sine_data(1500, 21);
  const ConfidenceBall ball = build_confidence_ball(data, cfg, basis);
  CHECK(ball.n == 500);
  CHECK(ball.center.resolution == 10);
  CHECK((ball.beta_hat == 1.0 || ball.beta_hat == 2.0));
  CHECK(ball.j1 == test_level(500, ball.beta_hat, 1));
  CHECK(ball.z_alpha == doctest::Approx(10.0));
  CHECK(ball.deterministic_slack > 0.0);
  CHECK(radius_upper_bound(ball) > 0.0);

  // Deterministic given the data.
  const ConfidenceBall again = build_confidence_ball(data, cfg, basis);
  CHECK(again.U_hat == ball.U_hat);
  CHECK(again.beta_hat == ball.beta_hat);

  cfg.floor_U = true;
  CHECK(build_confidence_ball(data, cfg, basis).U_hat >= 0.0);

  cfg.params.gamma_min = 3.0; // below 2 beta_max
  CHECK_THROWS_AS(build_confidence_ball(data, cfg, basis), std::invalid_argument);
  CHECK_THROWS_AS(build_confidence_ball(data.slice(0, 5), default_config(), basis),
                  std::invalid_argument);
}
