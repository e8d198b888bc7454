#include "binreg/wavelet_basis.hpp"

#include <stdexcept>

namespace binreg {

WaveletBasis WaveletBasis::build(Family family, int regularity, int dim, int resolution)
{
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("dimension must be in [1, 3]");
  if (family == Family::haar && regularity != 1)
    throw std::invalid_argument("haar basis has regularity 1");
  if (family == Family::daubechies && (regularity < 2 || regularity > kMaxDaubechiesOrder))
    throw std::invalid_argument("daubechies-N requires 2 <= N <= 10");

  WaveletBasis b;
  b.family_ = family;
  b.regularity_ = regularity;
  b.dim_ = dim;
  b.resolution_ = resolution;
  while ((1 << b.base_level_) < regularity)
    ++b.base_level_;
  if (resolution < b.base_level_ + 2 || resolution > 24)
    throw std::invalid_argument("tabulation resolution too small for the base level");

  b.filter_ = daubechies_filter(regularity);
  b.support_ = static_cast<int>(b.filter_.size()) - 1;
  if (family == Family::daubechies) {
    b.phi_table_ = cascade_scaling(b.filter_, resolution);
    b.psi_table_ = cascade_wavelet(b.filter_, b.phi_table_, resolution);
  }
  return b;
}

WaveletBasis WaveletBasis::build(const std::string& family, int dim, int resolution)
{
  if (family == "haar")
    return build(Family::haar, 1, dim, resolution);
  const std::string prefix = "daubechies-";
  if (family.rfind(prefix, 0) == 0) {
    int order = 0;
    try {
      order = std::stoi(family.substr(prefix.size()));
    } catch (const std::exception&) {
      throw std::invalid_argument("unsupported wavelet family: " + family);
    }
    return build(Family::daubechies, order, dim, resolution);
  }
  throw std::invalid_argument("unsupported wavelet family: " + family);
}

std::string WaveletBasis::name() const
{
  return family_ == Family::haar ? "haar" : "daubechies-" + std::to_string(regularity_);
}

void WaveletBasis::check_level(int level) const
{
  if (level < base_level_ || level > max_level())
    throw std::out_of_range("level " + std::to_string(level) + " outside [" +
                            std::to_string(base_level_) + ", " + std::to_string(max_level()) +
                            "]");
}

double WaveletBasis::phi(double u) const
{
  if (u < 0.0 || u >= support_)
    return 0.0;
  if (family_ == Family::haar)
    return 1.0;
  const auto idx = static_cast<Eigen::Index>(std::lround(std::ldexp(u, resolution_)));
  return idx < phi_table_.size() ? phi_table_[idx] : 0.0;
}

double WaveletBasis::psi(double u) const
{
  if (u < 0.0 || u >= support_)
    return 0.0;
  if (family_ == Family::haar)
    return u < 0.5 ? 1.0 : -1.0;
  const auto idx = static_cast<Eigen::Index>(std::lround(std::ldexp(u, resolution_)));
  return idx < psi_table_.size() ? psi_table_[idx] : 0.0;
}

LevelTaps level_taps(const WaveletBasis& basis, int level, double x)
{
  LevelTaps taps;
  const int count = 1 << level;
  const double t = std::ldexp(x, level);
  const double amp = std::sqrt(std::ldexp(1.0, level));
  const int support = basis.support_length();

  // Shifts k with t - k in [0, support): k in (t - support, t].
  const auto k_hi = static_cast<long>(std::floor(t));
  for (long k = k_hi; k > k_hi - support; --k) {
    const double u = t - static_cast<double>(k);
    const double p = basis.phi(u);
    const double q = basis.psi(u);
    int wrapped = static_cast<int>(((k % count) + count) % count);
    int slot = 0;
    for (; slot < taps.count; ++slot)
      if (taps.index[slot] == wrapped)
        break;
    if (slot == taps.count) {
      taps.index[slot] = wrapped;
      taps.phi[slot] = 0.0;
      taps.psi[slot] = 0.0;
      ++taps.count;
    }
    taps.phi[slot] += amp * p;
    taps.psi[slot] += amp * q;
  }
  return taps;
}

double eval_basis(const WaveletBasis& basis, int level, const Eigen::VectorXi& k, Orientation v,
                  const PointRef& x)
{
  const int d = basis.dim();
  if (level < 0 || level > basis.max_level())
    throw std::out_of_range("level out of range");
  if (k.size() != d || x.size() != d)
    throw std::out_of_range("translate/point dimension mismatch");
  if (v >= (1u << d))
    throw std::out_of_range("orientation out of range");
  const int count = 1 << level;
  const double amp = std::sqrt(std::ldexp(1.0, level));
  double value = 1.0;
  for (int i = 0; i < d; ++i) {
    if (k[i] < 0 || k[i] >= count)
      throw std::out_of_range("translate out of range");
    const double t = std::ldexp(x[i], level) - k[i];
    // Periodic copies t + m 2^l that land in the support.
    double acc = 0.0;
    const int support = basis.support_length();
    const long m_lo = static_cast<long>(std::ceil(-t / count));
    const long m_hi = static_cast<long>(std::floor((support - t) / count));
    for (long m = m_lo; m <= m_hi; ++m) {
      const double u = t + static_cast<double>(m) * count;
      acc += (v >> i) & 1u ? basis.psi(u) : basis.phi(u);
    }
    value *= amp * acc;
  }
  return value;
}

namespace {

// Per-coordinate sums sum_k f_k(a) f_k(b) for f = phi and f = psi.
std::pair<double, double> coordinate_kernels(const WaveletBasis& basis, int level, double a,
                                             double b)
{
  const LevelTaps ta = level_taps(basis, level, a);
  const LevelTaps tb = level_taps(basis, level, b);
  double kphi = 0.0, kpsi = 0.0;
  for (int i = 0; i < ta.count; ++i)
    for (int j = 0; j < tb.count; ++j)
      if (ta.index[i] == tb.index[j]) {
        kphi += ta.phi[i] * tb.phi[j];
        kpsi += ta.psi[i] * tb.psi[j];
      }
  return { kphi, kpsi };
}

void check_kernel_args(const WaveletBasis& basis, int level, const PointRef& x1,
                       const PointRef& x2)
{
  basis.check_level(level);
  if (x1.size() != basis.dim() || x2.size() != basis.dim())
    throw std::invalid_argument("point dimension mismatch");
}

} // namespace

double kernel_v(const WaveletBasis& basis, int level, const PointRef& x1, const PointRef& x2)
{
  check_kernel_args(basis, level, x1, x2);
  double value = 1.0;
  for (int i = 0; i < basis.dim(); ++i)
    value *= coordinate_kernels(basis, level, x1[i], x2[i]).first;
  return value;
}

double kernel_w(const WaveletBasis& basis, int level, const PointRef& x1, const PointRef& x2)
{
  check_kernel_args(basis, level, x1, x2);
  // sum over v != 0 of the tensor product = prod(kphi + kpsi) - prod(kphi).
  double all = 1.0, scaling = 1.0;
  for (int i = 0; i < basis.dim(); ++i) {
    const auto [kphi, kpsi] = coordinate_kernels(basis, level, x1[i], x2[i]);
    all *= kphi + kpsi;
    scaling *= kphi;
  }
  return all - scaling;
}

} // namespace binreg
