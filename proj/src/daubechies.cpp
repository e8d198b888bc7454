#include "binreg/wavelet_basis.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <stdexcept>
#include <vector>

namespace binreg {

namespace {

double binomial(int n, int k)
{
  double r = 1.0;
  for (int i = 1; i <= k; ++i)
    r = r * (n - k + i) / i;
  return r;
}

using cpoly = std::vector<std::complex<double>>;

cpoly multiply(const cpoly& a, const cpoly& b)
{
  cpoly out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j)
      out[i + j] += a[i] * b[j];
  return out;
}

} // namespace

Eigen::VectorXd daubechies_filter(int order)
{
  if (order < 1 || order > kMaxDaubechiesOrder)
    throw std::invalid_argument("daubechies order must be in [1, 10]");
  const double sqrt2 = std::sqrt(2.0);
  if (order == 1)
    return Eigen::Vector2d(1.0 / sqrt2, 1.0 / sqrt2);

  // Daubechies polynomial P(y) = sum_{k<N} C(N-1+k, k) y^k, y = sin^2(w/2).
  const int deg = order - 1;
  Eigen::VectorXd coef(order);
  for (int k = 0; k < order; ++k)
    coef[k] = binomial(order - 1 + k, k);

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i)
    companion(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i)
    companion(i, deg - 1) = -coef[i] / coef[deg];
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  const Eigen::VectorXcd yroots = es.eigenvalues();

  // Each y root maps to a reciprocal pair z, 1/z with z + 1/z = 2 - 4y; the
  // factor (z - z_r) keeps the root outside the unit circle, which yields
  // the conventional ordering h_0 > 0 of Daubechies' tables.
  cpoly poly{ 1.0 };
  for (int i = 0; i < order; ++i)
    poly = multiply(poly, cpoly{ 1.0, 1.0 });
  for (Eigen::Index r = 0; r < yroots.size(); ++r) {
    const std::complex<double> b = 2.0 - 4.0 * yroots[r];
    const std::complex<double> disc = std::sqrt(b * b - 4.0);
    std::complex<double> z = (b + disc) / 2.0;
    if (std::abs(z) < 1.0)
      z = (b - disc) / 2.0;
    poly = multiply(poly, cpoly{ -z, 1.0 });
  }

  Eigen::VectorXd h(poly.size());
  for (size_t i = 0; i < poly.size(); ++i)
    h[static_cast<Eigen::Index>(i)] = poly[i].real();
  h *= sqrt2 / h.sum();
  return h;
}

Eigen::VectorXd cascade_scaling(const Eigen::VectorXd& filter, int resolution)
{
  const int len = static_cast<int>(filter.size());
  const int support = len - 1;
  const double sqrt2 = std::sqrt(2.0);
  const Eigen::Index step0 = Eigen::Index{ 1 } << resolution;
  Eigen::VectorXd table = Eigen::VectorXd::Zero(support * step0 + 1);

  // phi(k) = sum_m sqrt2 h_m phi(2k - m) on interior integers, with
  // sum_k phi(k) = 1 appended as a normalizing row.
  const int inner = support - 1;
  if (inner > 0) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(inner + 1, inner);
    for (int k = 1; k <= inner; ++k) {
      for (int i = 1; i <= inner; ++i) {
        const int m = 2 * k - i;
        if (m >= 0 && m < len)
          a(k - 1, i - 1) = sqrt2 * filter[m];
      }
      a(k - 1, k - 1) -= 1.0;
    }
    a.row(inner).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(inner + 1);
    rhs[inner] = 1.0;
    const Eigen::VectorXd values = a.colPivHouseholderQr().solve(rhs);
    for (int k = 1; k <= inner; ++k)
      table[k * step0] = values[k - 1];
  } else {
    table[0] = 1.0;
  }

  for (int r = 1; r <= resolution; ++r) {
    const Eigen::Index step = step0 >> r;
    for (Eigen::Index i = step; i < table.size(); i += 2 * step) {
      // x = i / 2^R; 2x - m sits on the coarser (already filled) grid.
      double acc = 0.0;
      for (int m = 0; m < len; ++m) {
        const Eigen::Index j = 2 * i - m * step0;
        if (j >= 0 && j < table.size())
          acc += filter[m] * table[j];
      }
      table[i] = sqrt2 * acc;
    }
  }
  return table;
}

Eigen::VectorXd cascade_wavelet(const Eigen::VectorXd& filter, const Eigen::VectorXd& phi_table,
                                int resolution)
{
  const int len = static_cast<int>(filter.size());
  const int support = len - 1;
  const double sqrt2 = std::sqrt(2.0);
  const Eigen::Index step0 = Eigen::Index{ 1 } << resolution;
  Eigen::VectorXd table = Eigen::VectorXd::Zero(phi_table.size());
  for (Eigen::Index i = 0; i < table.size(); ++i) {
    double acc = 0.0;
    for (int k = 0; k < len; ++k) {
      const Eigen::Index j = 2 * i - k * step0;
      if (j < 0 || j >= phi_table.size())
        continue;
      const double g = (k % 2 == 0 ? 1.0 : -1.0) * filter[support - k];
      acc += g * phi_table[j];
    }
    table[i] = sqrt2 * acc;
  }
  return table;
}

} // namespace binreg
