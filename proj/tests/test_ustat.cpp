#include "binreg/random.hpp"
#include "binreg/ustat.hpp"

#include <doctest.h>

#include <cmath>

using namespace binreg;

namespace {

WeightedSample random_sample(Rng& rng, int d, Eigen::Index n, double bound = 2.0)
{
  WeightedSample ws{ PointMatrix(d, n), Eigen::VectorXd(n), bound };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k)
      ws.points(k, i) = rng.uniform();
    ws.weights[i] = bound * (2.0 * rng.uniform() - 1.0);
  }
  return ws;
}

double rel_err(double a, double b)
{
  return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b)));
}

} // namespace

TEST_CASE("two observations in one cell")
{
  const WaveletBasis b = WaveletBasis::build(Family::haar, 1, 1, 12);
  WeightedSample ws{ PointMatrix(1, 2), Eigen::VectorXd::Ones(2), 1.0 };
  ws.points << 0.1, 0.2;
  // (1 / (2 * 1)) * 2 * K = K = 2^j.
  CHECK(ustat_fast(b, ws, 2, KernelKind::V) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(ustat_bruteforce(b, ws, 2, KernelKind::V) == doctest::Approx(4.0).epsilon(1e-14));
  ws.weights.setZero();
  CHECK(ustat_fast(b, ws, 2, KernelKind::V) == 0.0);
  CHECK(ustat_fast(b, ws, 2, KernelKind::W) == 0.0);
}

TEST_CASE("a repeated point returns the kernel diagonal")
{
  for (int d = 1; d <= 3; ++d) {
    const WaveletBasis b = WaveletBasis::build(Family::haar, 1, d, 8);
    WeightedSample ws{ PointMatrix::Constant(d, 7, 0.37), Eigen::VectorXd::Ones(7), 1.0 };
    for (int j = 0; j <= 3; ++j) {
      CHECK(ustat_fast(b, ws, j, KernelKind::V) == doctest::Approx(std::ldexp(1.0, j * d)));
      CHECK(ustat_bruteforce(b, ws, j, KernelKind::V) == doctest::Approx(std::ldexp(1.0, j * d)));
    }
  }
}

TEST_CASE("fast identity matches the double sum")
{
  Rng rng(2024);
  SUBCASE("haar, n = 100, j = 3")
  {
    const WaveletBasis b = WaveletBasis::build(Family::haar, 1, 1, 12);
    const WeightedSample ws = random_sample(rng, 1, 100);
    for (auto kind : { KernelKind::V, KernelKind::W })
      CHECK(rel_err(ustat_fast(b, ws, 3, kind), ustat_bruteforce(b, ws, 3, kind)) < 1e-10);
  }
  SUBCASE("haar in two and three dimensions")
  {
    for (int d = 2; d <= 3; ++d) {
      const WaveletBasis b = WaveletBasis::build(Family::haar, 1, d, 6);
      const WeightedSample ws = random_sample(rng, d, 80);
      for (int j = 0; j <= 2; ++j)
        for (auto kind : { KernelKind::V, KernelKind::W })
          CHECK(rel_err(ustat_fast(b, ws, j, kind), ustat_bruteforce(b, ws, j, kind)) < 1e-10);
    }
  }
  SUBCASE("daubechies")
  {
    const WaveletBasis b = WaveletBasis::build(Family::daubechies, 3, 1, 12);
    const WeightedSample ws = random_sample(rng, 1, 60);
    for (int j = b.base_level(); j <= 5; ++j)
      for (auto kind : { KernelKind::V, KernelKind::W })
        CHECK(rel_err(ustat_fast(b, ws, j, kind), ustat_bruteforce(b, ws, j, kind)) < 1e-6);
  }
}

TEST_CASE("permutation invariance and bilinearity")
{
  Rng rng(9);
  const WaveletBasis b = WaveletBasis::build(Family::haar, 1, 2, 8);
  WeightedSample ws = random_sample(rng, 2, 50);
  const double base = ustat_fast(b, ws, 2, KernelKind::V);
  WeightedSample swapped = ws;
  swapped.points.col(3).swap(swapped.points.col(17));
  std::swap(swapped.weights[3], swapped.weights[17]);
  CHECK(ustat_fast(b, swapped, 2, KernelKind::V) == doctest::Approx(base).epsilon(1e-12));
  CHECK(ustat_bruteforce(b, swapped, 2, KernelKind::V) == doctest::Approx(base).epsilon(1e-10));
  WeightedSample scaled = ws;
  scaled.weights *= -3.0;
  scaled.bound = 6.0;
  CHECK(ustat_fast(b, scaled, 2, KernelKind::V) == doctest::Approx(9.0 * base).epsilon(1e-12));
}

TEST_CASE("input validation")
{
  const WaveletBasis b = WaveletBasis::build(Family::haar, 1, 1, 8);
  WeightedSample one{ PointMatrix::Constant(1, 1, 0.5), Eigen::VectorXd::Ones(1), 1.0 };
  CHECK_THROWS_AS(ustat_fast(b, one, 1, KernelKind::V), std::invalid_argument);
  WeightedSample big{ PointMatrix::Constant(1, 3, 0.5), Eigen::VectorXd::Constant(3, 2.0), 1.0 };
  CHECK_THROWS_AS(ustat_fast(b, big, 1, KernelKind::V), std::invalid_argument);
  WeightedSample ok{ PointMatrix::Constant(1, 3, 0.5), Eigen::VectorXd::Ones(3), 1.0 };
  CHECK_THROWS_AS(ustat_fast(b, ok, 7, KernelKind::V), std::out_of_range);
}

TEST_CASE("hoeffding decomposition")
{
  const WaveletBasis b = WaveletBasis::build(Family::haar, 1, 1, 12);
  const int R = 10;
  const GridFunction uniform = GridFunction::constant(1, R, 1.0, Interpretation::density);

  SUBCASE("components add up to the statistic")
  {
    Rng rng(77);
    const GridFunction g = GridFunction::from_function(
      1, R, [](const PointRef& x) { return 0.6 + 0.8 * x[0]; }, Interpretation::density);
    const GridFunction m = GridFunction::from_function(
      1, R, [](const PointRef& x) { return std::sin(3.0 * x[0]); });
    for (int rep = 0; rep < 10; ++rep) {
      const WeightedSample ws = random_sample(rng, 1, 40 + 10 * rep);
      for (auto kind : { KernelKind::V, KernelKind::W }) {
        const HoeffdingParts h = hoeffding_split(b, ws, 3, kind, g, m);
        CHECK(h.total() == doctest::Approx(ustat_fast(b, ws, 3, kind)).epsilon(1e-6));
      }
    }
  }

  SUBCASE("centered weights give a degenerate statistic")
  {
    // f = 1/2: a = y - 1/2 has conditional mean zero, so mu = 0.
    Rng rng(4);
    const GridFunction zero = GridFunction::constant(1, R, 0.0);
    const WeightedSample ws = random_sample(rng, 1, 64, 0.5);
    const HoeffdingParts h = hoeffding_split(b, ws, 2, KernelKind::V, uniform, zero);
    CHECK(h.mean == 0.0);
    CHECK(h.linear == 0.0);
    CHECK(h.degenerate == doctest::Approx(ustat_fast(b, ws, 2, KernelKind::V)).epsilon(1e-12));
  }

  SUBCASE("wavelets integrate to zero under the uniform density")
  {
    Rng rng(5);
    const GridFunction one = GridFunction::constant(1, R, 1.0);
    WeightedSample ws = random_sample(rng, 1, 30);
    ws.weights.setOnes();
    const HoeffdingParts h = hoeffding_split(b, ws, 3, KernelKind::W, uniform, one);
    CHECK(std::abs(h.mean) < 1e-14);
    CHECK(std::abs(h.linear) < 1e-14);
  }

  SUBCASE("missing density")
  {
    Rng rng(6);
    const WeightedSample ws = random_sample(rng, 1, 10);
    CHECK_THROWS_AS(hoeffding_split(b, ws, 2, KernelKind::V, GridFunction{}, uniform),
                    std::invalid_argument);
  }
}

TEST_CASE("tail parameters")
{
  const TailParams t = tail_params(101, 2, 1);
  CHECK(t.a1 == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(tail_params(2, 3, 1).a1 == doctest::Approx(std::sqrt(8.0)));
  for (Eigen::Index n : { 5, 64, 1000 })
    for (int j : { 0, 2, 5 }) {
      const TailParams p = tail_params(n, j, 2);
      const double expect = (1.0 - std::ldexp(1.0, 2 * j) / n) / (n - 1.0);
      CHECK(p.a2 - p.a3 == doctest::Approx(expect).epsilon(1e-12));
    }
  CHECK_THROWS_AS(tail_params(1, 0, 1), std::invalid_argument);
}
