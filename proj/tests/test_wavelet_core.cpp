#include "binreg/coeff_tree.hpp"
#include "binreg/io.hpp"
#include "binreg/random.hpp"
#include "binreg/wavelet_basis.hpp"

#include <doctest.h>

#include <cmath>

using namespace binreg;

namespace {

Eigen::VectorXd pt(std::initializer_list<double> v)
{
  Eigen::VectorXd x(v.size());
  int i = 0;
  for (double e : v)
    x[i++] = e;
  return x;
}

} // namespace

TEST_CASE("basis construction picks the base level from the regularity")
{
  CHECK(WaveletBasis::build(Family::haar, 1, 1, 12).base_level() == 0);
  CHECK(WaveletBasis::build(Family::daubechies, 4, 1, 12).base_level() == 2);
  CHECK(WaveletBasis::build("daubechies-6", 2, 10).base_level() == 3);
  CHECK(WaveletBasis::build(Family::haar, 1, 3, 8).max_level() == 6);
  CHECK_THROWS_AS(WaveletBasis::build(Family::haar, 1, 4, 12), std::invalid_argument);
  CHECK_THROWS_AS(WaveletBasis::build(Family::daubechies, 1, 1, 12), std::invalid_argument);
  CHECK_THROWS_AS(WaveletBasis::build("symlet-4", 1, 12), std::invalid_argument);
  CHECK_THROWS_AS(WaveletBasis::build(Family::daubechies, 8, 1, 4), std::invalid_argument);
}

TEST_CASE("daubechies filters")
{
  for (int N = 2; N <= kMaxDaubechiesOrder; ++N) {
    const Eigen::VectorXd h = daubechies_filter(N);
    REQUIRE(h.size() == 2 * N);
    CHECK(h.sum() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(h.squaredNorm() == doctest::Approx(1.0).epsilon(1e-12));
    // Orthogonality to even shifts.
    for (int s = 2; s < 2 * N; s += 2) {
      double dot = 0.0;
      for (int k = 0; k + s < h.size(); ++k)
        dot += h[k] * h[k + s];
      CHECK(std::abs(dot) < 1e-12);
    }
  }
  // db2 in closed form.
  const double r3 = std::sqrt(3.0), den = 4.0 * std::sqrt(2.0);
  const Eigen::VectorXd h = daubechies_filter(2);
  CHECK(h[0] == doctest::Approx((1 + r3) / den).epsilon(1e-12));
  CHECK(h[1] == doctest::Approx((3 + r3) / den).epsilon(1e-12));
  CHECK(h[2] == doctest::Approx((3 - r3) / den).epsilon(1e-12));
  CHECK(h[3] == doctest::Approx((1 - r3) / den).epsilon(1e-12));
}

TEST_CASE("daubechies-2 tabulation satisfies the two-scale relation")
{
  const int R = 10;
  const WaveletBasis b = WaveletBasis::build(Family::daubechies, 2, 1, R);
  const Eigen::VectorXd& phi = b.phi_table();
  const Eigen::VectorXd& h = b.filter();
  // Closed-form integer values: phi(1) = (1 + sqrt 3) / 2, phi(2) = (1 - sqrt 3) / 2.
  CHECK(phi[1 << R] == doctest::Approx((1 + std::sqrt(3.0)) / 2).epsilon(1e-12));
  CHECK(phi[2 << R] == doctest::Approx((1 - std::sqrt(3.0)) / 2).epsilon(1e-12));
  double worst = 0.0;
  for (Eigen::Index m = 0; 2 * m < phi.size(); m += 3) {
    const double x = std::ldexp(static_cast<double>(m), -R);
    double rhs = 0.0;
    for (int k = 0; k < h.size(); ++k)
      rhs += std::sqrt(2.0) * h[k] * b.phi(2.0 * x - k);
    worst = std::max(worst, std::abs(phi[m] - rhs));
  }
  CHECK(worst < 1e-8);
  CHECK(phi.sum() * std::ldexp(1.0, -R) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("basis function values")
{
  const WaveletBasis haar = WaveletBasis::build(Family::haar, 1, 1, 12);
  Eigen::VectorXi k(1);
  k << 0;
  CHECK(eval_basis(haar, 1, k, 1u, pt({ 0.1 })) == doctest::Approx(std::sqrt(2.0)));
  CHECK(eval_basis(haar, 1, k, 1u, pt({ 0.6 })) == 0.0);
  CHECK(eval_basis(haar, 1, k, 1u, pt({ 0.3 })) == doctest::Approx(-std::sqrt(2.0)));
  CHECK(eval_basis(haar, 1, k, 0u, pt({ 0.3 })) == doctest::Approx(std::sqrt(2.0)));
  k << 2;
  CHECK_THROWS_AS(eval_basis(haar, 1, k, 1u, pt({ 0.3 })), std::out_of_range);

  // At a tabulation node the value is the cascade value.
  const int R = 10;
  const WaveletBasis db = WaveletBasis::build(Family::daubechies, 2, 1, R);
  const int l = 2;
  k << 1;
  const double x = 0.5 + std::ldexp(3.0, -R);
  const double u = std::ldexp(x, l) - 1.0; // 2^l x - k
  const auto idx = static_cast<Eigen::Index>(std::lround(std::ldexp(u, R)));
  CHECK(eval_basis(db, l, k, 0u, pt({ x })) == doctest::Approx(2.0 * db.phi_table()[idx]));
}

TEST_CASE("haar kernels in closed form")
{
  const WaveletBasis b1 = WaveletBasis::build(Family::haar, 1, 1, 12);
  CHECK(kernel_v(b1, 1, pt({ 0.1 }), pt({ 0.2 })) == doctest::Approx(2.0));
  CHECK(kernel_v(b1, 1, pt({ 0.1 }), pt({ 0.6 })) == 0.0);
  CHECK(kernel_w(b1, 0, pt({ 0.1 }), pt({ 0.2 })) == doctest::Approx(1.0));
  CHECK(kernel_w(b1, 0, pt({ 0.1 }), pt({ 0.7 })) == doctest::Approx(-1.0));
  const WaveletBasis b2 = WaveletBasis::build(Family::haar, 1, 2, 12);
  CHECK(kernel_v(b2, 2, pt({ 0.1, 0.1 }), pt({ 0.1, 0.1 })) == doctest::Approx(16.0));
}

TEST_CASE("kernel symmetry and MRA nesting")
{
  Rng rng(11);
  struct Case
  {
    WaveletBasis basis;
    double tol;
  };
  const std::vector<Case> cases = {
    { WaveletBasis::build(Family::haar, 1, 1, 12), 1e-12 },
    { WaveletBasis::build(Family::haar, 1, 2, 10), 1e-12 },
    { WaveletBasis::build(Family::haar, 1, 3, 6), 1e-12 },
    { WaveletBasis::build(Family::daubechies, 2, 1, 14), 1e-6 },
    { WaveletBasis::build(Family::daubechies, 4, 1, 14), 1e-6 },
    { WaveletBasis::build(Family::daubechies, 3, 2, 12), 1e-6 },
  };
  for (const auto& c : cases) {
    const int d = c.basis.dim();
    // Daubechies values are exact on the tabulation lattice only; off it the
    // nearest-node lookup dominates, so sample lattice points.
    const std::uint64_t M = std::uint64_t{ 1 } << c.basis.resolution();
    Eigen::VectorXd x(d), y(d);
    for (int rep = 0; rep < 40; ++rep) {
      for (int i = 0; i < d; ++i) {
        const std::uint64_t mx = rng.below(M);
        // Every other pair shares a coarse cell so the kernels are nonzero.
        const std::uint64_t my = rep % 2 ? rng.below(M) : std::min(M - 1, mx + rng.below(M / 64));
        x[i] = static_cast<double>(mx) / M;
        y[i] = static_cast<double>(my) / M;
      }
      for (int j = c.basis.base_level(); j < std::min(c.basis.max_level(), 5); ++j) {
        const double kv = kernel_v(c.basis, j, x, y);
        CHECK(kv == doctest::Approx(kernel_v(c.basis, j, y, x)).epsilon(1e-12));
        CHECK(kernel_w(c.basis, j, x, y) ==
              doctest::Approx(kernel_w(c.basis, j, y, x)).epsilon(1e-12));
        const double lhs = kernel_v(c.basis, j + 1, x, y);
        const double rhs = kv + kernel_w(c.basis, j, x, y);
        CHECK(std::abs(lhs - rhs) <= c.tol * std::max(1.0, std::abs(lhs)));
      }
    }
  }
}

TEST_CASE("reproducing property of the scaling kernel")
{
  // int K_{V_j}(x, y) q(y) dy = q(x) for q in V_j; quadrature on the
  // tabulation grid, where the tabulated values are exact.
  for (const auto& basis : { WaveletBasis::build(Family::haar, 1, 1, 12),
                             WaveletBasis::build(Family::daubechies, 4, 1, 12) }) {
    const int R = basis.resolution();
    const int j = basis.base_level() + 2;
    const Eigen::Index M = Eigen::Index{ 1 } << R;
    Eigen::VectorXi k(1);
    for (int l = basis.base_level(); l <= j - 1; ++l) {
      k << (1 << l) / 2;
      for (double x0 : { 0.13, 0.5, 0.871 }) {
        const double x = std::round(x0 * M) / M;
        double acc = 0.0;
        for (Eigen::Index m = 0; m < M; ++m) {
          const Eigen::VectorXd y = pt({ static_cast<double>(m) / M });
          acc += kernel_v(basis, j, pt({ x }), y) * eval_basis(basis, l, k, 1u, y);
        }
        acc /= static_cast<double>(M);
        CHECK(std::abs(acc - eval_basis(basis, l, k, 1u, pt({ x }))) < 1e-6);
      }
    }
  }
}

TEST_CASE("analysis of simple functions")
{
  const WaveletBasis b1 = WaveletBasis::build(Family::haar, 1, 1, 12);
  const WaveletBasis b2 = WaveletBasis::build(Family::haar, 1, 2, 8);

  SUBCASE("constants live in the scaling block")
  {
    for (const auto* b : { &b1, &b2 }) {
      const int R = b->resolution();
      const CoeffTree t = analyze(*b, GridFunction::constant(b->dim(), R, 1.0), R - 2);
      CHECK(t.scaling.size() == 1);
      CHECK(t.scaling[0] == doctest::Approx(1.0).epsilon(1e-14));
      for (int l = t.base_level; l <= t.max_level; ++l)
        CHECK(t.level_norm(l) < 1e-13);
    }
  }

  SUBCASE("a single wavelet has one unit coefficient")
  {
    Eigen::VectorXi k(1);
    k << 3;
    const GridFunction h = GridFunction::from_function(
      1, 10, [&](const PointRef& x) { return eval_basis(b1, 2, k, 1u, x); });
    const CoeffTree t = analyze(b1, h, 8);
    CHECK(t.detail(2, 1)[3] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(t.squared_norm_below(9) == doctest::Approx(1.0).epsilon(1e-13));
  }

  SUBCASE("h(x) = x has detail coefficients -2^{-3l/2} / 4")
  {
    const GridFunction h = GridFunction::from_function(1, 12, [](const PointRef& x) { return x[0]; });
    const CoeffTree t = analyze(b1, h, 10);
    CHECK(t.scaling[0] == doctest::Approx(0.5).epsilon(1e-14));
    for (int l = 0; l <= 10; ++l)
      for (Eigen::Index kk = 0; kk < t.detail(l, 1).size(); ++kk)
        CHECK(t.detail(l, 1)[kk] == doctest::Approx(-std::exp2(-1.5 * l) / 4.0).epsilon(1e-10));
  }

  SUBCASE("analysis rejects levels beyond the grid")
  {
    CHECK_THROWS_AS(analyze(b1, GridFunction::constant(1, 8, 1.0), 7), std::invalid_argument);
  }
}

TEST_CASE("synthesis inverts analysis and truncation loses the Parseval tail")
{
  const WaveletBasis b = WaveletBasis::build(Family::haar, 1, 1, 12);
  Rng rng(5);
  // Piecewise constant on cells of width 2^-8, sampled on a 2^-10 grid.
  Eigen::ArrayXd cells(256);
  for (auto& v : cells)
    v = rng.uniform();
  GridFunction h = GridFunction::constant(1, 10, 0.0);
  for (Eigen::Index i = 0; i < h.size(); ++i)
    h.values[i] = cells[i / 4];
  const CoeffTree t = analyze(b, h, 7);
  const GridFunction back = synthesize(b, t, 8, 10);
  CHECK((back.values - h.values).abs().maxCoeff() < 1e-12);
  for (int j = 0; j <= 8; ++j) {
    const GridFunction pj = synthesize(b, t, j, 10);
    double tail = 0.0;
    for (int l = j; l <= 7; ++l)
      tail += std::pow(t.level_norm(l), 2);
    CHECK(squared_l2_distance(pj, h) == doctest::Approx(tail).epsilon(1e-10));
  }
  const GridFunction c = GridFunction::constant(1, 8, 0.3);
  const CoeffTree tc = analyze(b, c, 6);
  for (int j = 0; j <= 7; ++j)
    CHECK((synthesize(b, tc, j, 8).values - 0.3).abs().maxCoeff() < 1e-14);
  CHECK_THROWS(synthesize(b, t, 9, 8));
}

TEST_CASE("besov norm")
{
  CoeffTree t = CoeffTree::zeros(1, 0, 6);
  t.detail(4, 1)[5] = 1.0;
  CHECK(besov_norm(t, 1.5) == std::exp2(4 * 1.5));
  CHECK(besov_norm(t, 0.5) == 4.0);
  CoeffTree c = CoeffTree::zeros(1, 0, 6);
  c.scaling[0] = -0.7;
  CHECK(besov_norm(c, 2.0) == doctest::Approx(0.7));
  CoeffTree c2 = CoeffTree::zeros(1, 2, 4);
  c2.scaling.setConstant(0.5); // ||scaling|| = 1
  CHECK(besov_norm(c2, 1.0) == doctest::Approx(4.0));
  Rng rng(3);
  CoeffTree r = CoeffTree::zeros(2, 1, 3);
  r.scaling[0] = rng.uniform();
  for (int l = 1; l <= 3; ++l)
    for (int v = 1; v <= 3; ++v)
      for (Eigen::Index k = 0; k < r.detail(l, v).size(); ++k)
        r.detail(l, v)[k] = rng.uniform() - 0.5;
  CHECK(besov_norm(2.0 * r, 1.2) == doctest::Approx(2.0 * besov_norm(r, 1.2)).epsilon(1e-14));
}

TEST_CASE("distance to the besov ball")
{
  SUBCASE("members have distance zero")
  {
    CoeffTree t = CoeffTree::zeros(1, 0, 4);
    t.scaling[0] = 0.3;
    t.detail(2, 1)[1] = 0.05;
    CHECK(distance_to_besov_ball(t, 1.0, 1.0) == 0.0);
  }
  SUBCASE("one active block")
  {
    CoeffTree t = CoeffTree::zeros(1, 0, 5);
    t.detail(3, 1)[2] = 0.6;
    t.detail(3, 1)[5] = 0.8; // block norm 1
    const double M = 2.0, beta = 1.0;
    CHECK(distance_to_besov_ball(t, beta, M) ==
          doctest::Approx(1.0 - M * std::exp2(-3 * beta)).epsilon(1e-10));
  }
  SUBCASE("numerical projection oracle")
  {
    const Json fx = Json::parse(read_text_file(BINREG_FIXTURE_DIR "/besov_distance.json"));
    REQUIRE(fx["cases"].size() == 20);
    for (const auto& c : fx["cases"]) {
      const CoeffTree t = coeff_tree_from_json(c["tree"]);
      const double got = distance_to_besov_ball(t, c["beta"].get<double>(),
                                                c["radius"].get<double>());
      CHECK(std::abs(got - c["distance"].get<double>()) < 1e-6);
    }
  }
}

TEST_CASE("coefficient tree arithmetic")
{
  CoeffTree a = CoeffTree::zeros(1, 0, 3);
  CoeffTree b = CoeffTree::zeros(1, 0, 3);
  a.scaling[0] = 1.0;
  b.detail(2, 1)[1] = 2.0;
  const CoeffTree s = a + b;
  CHECK(s.scaling[0] == 1.0);
  CHECK(s.detail(2, 1)[1] == 2.0);
  CHECK((s - b).level_norm(2) == 0.0);
  CHECK(s.truncated(2).max_level == 1);
  CHECK_THROWS_AS(a + CoeffTree::zeros(1, 0, 4), std::invalid_argument);
}
