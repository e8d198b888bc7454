#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

namespace binreg {

//! Observations are stored column-wise: a d x n matrix, one point per column.
using PointMatrix = Eigen::MatrixXd;
using PointRef = Eigen::Ref<const Eigen::VectorXd>;

enum class Family { haar, daubechies };

//! Tensor orientation v in {0,1}^d packed as a bitmask. Bit i set means the
//! mother wavelet acts in coordinate i, cleared means the scaling function.
using Orientation = unsigned;

//! Largest Daubechies order supported; bounds the number of active translates
//! per coordinate (support length 2N - 1).
inline constexpr int kMaxDaubechiesOrder = 10;
inline constexpr int kMaxTaps = 2 * kMaxDaubechiesOrder;
inline constexpr int kMaxDim = 3;

//! Compactly supported orthonormal wavelet basis on [0,1]^d, periodized.
//!
//! Haar functions are evaluated in closed form. Daubechies-N scaling and
//! mother functions are tabulated on the dyadic grid 2^-R of their support
//! [0, 2N-1] and looked up at the nearest node; lookups at tabulation nodes
//! are exact up to rounding.
class WaveletBasis
{
public:
  //! Throws std::invalid_argument for an unsupported family/order, a
  //! dimension outside [1, 3], or a resolution too small to hold the base
  //! level plus two.
  static WaveletBasis build(Family family, int regularity, int dim, int resolution);

  //! Parses "haar" or "daubechies-N".
  static WaveletBasis build(const std::string& family, int dim, int resolution);

  Family family() const { return family_; }
  int regularity() const { return regularity_; }
  int base_level() const { return base_level_; }
  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  int max_level() const { return resolution_ - 2; }
  int support_length() const { return support_; }
  std::string name() const;

  //! Low-pass filter h_k, normalized so that sum h_k = sqrt(2).
  const Eigen::VectorXd& filter() const { return filter_; }

  //! Mother functions on the real line (zero outside [0, support)).
  double phi(double u) const;
  double psi(double u) const;

  const Eigen::VectorXd& phi_table() const { return phi_table_; }
  const Eigen::VectorXd& psi_table() const { return psi_table_; }

  //! Throws std::out_of_range unless base_level() <= level <= max_level().
  void check_level(int level) const;

private:
  WaveletBasis() = default;

  Family family_ = Family::haar;
  int regularity_ = 1;
  int base_level_ = 0;
  int dim_ = 1;
  int resolution_ = 12;
  int support_ = 1;
  Eigen::VectorXd filter_;
  Eigen::VectorXd phi_table_;
  Eigen::VectorXd psi_table_;
};

//! Daubechies minimum-phase low-pass filter with N vanishing moments, from
//! spectral factorization of the Daubechies polynomial.
Eigen::VectorXd daubechies_filter(int order);

//! Scaling function values at k / 2^resolution, k = 0 .. (len-1) 2^resolution,
//! where len = filter.size(). Integer values come from the eigenvector of
//! the two-scale operator; finer dyadic values from exact refinement.
Eigen::VectorXd cascade_scaling(const Eigen::VectorXd& filter, int resolution);

//! Mother wavelet psi(x) = sqrt(2) sum_k (-1)^k h_{L-k} phi(2x - k) on the
//! same dyadic grid as the scaling table.
Eigen::VectorXd cascade_wavelet(const Eigen::VectorXd& filter, const Eigen::VectorXd& phi_table,
                                int resolution);

//! Periodized level-l functions that are nonzero at one coordinate x.
//! Indices are distinct translates in [0, 2^l); wrapped contributions are
//! merged.
struct LevelTaps
{
  int count = 0;
  std::array<int, kMaxTaps> index{};
  std::array<double, kMaxTaps> phi{};
  std::array<double, kMaxTaps> psi{};
};

LevelTaps level_taps(const WaveletBasis& basis, int level, double x);

enum class Block { scaling, details, all };

//! Calls fn(v, flat_k, value) for every level-`level` tensor basis function
//! of the requested block that is nonzero at x. flat_k = sum_i k_i 2^{level i}.
template <class Fn>
void for_each_active(const WaveletBasis& basis, int level, const PointRef& x, Block block, Fn&& fn)
{
  const int d = basis.dim();
  std::array<LevelTaps, kMaxDim> taps;
  for (int i = 0; i < d; ++i)
    taps[i] = level_taps(basis, level, x[i]);

  const Orientation v_first = block == Block::details ? 1u : 0u;
  const Orientation v_last = block == Block::scaling ? 0u : (1u << d) - 1u;
  const std::int64_t stride = std::int64_t{ 1 } << level;

  std::array<int, kMaxDim> pos{};
  for (Orientation v = v_first; v <= v_last; ++v) {
    pos.fill(0);
    while (true) {
      double value = 1.0;
      std::int64_t flat = 0;
      std::int64_t scale = 1;
      for (int i = 0; i < d; ++i) {
        const LevelTaps& t = taps[i];
        value *= (v >> i) & 1u ? t.psi[pos[i]] : t.phi[pos[i]];
        flat += scale * t.index[pos[i]];
        scale *= stride;
      }
      fn(v, static_cast<Eigen::Index>(flat), value);
      int i = 0;
      for (; i < d; ++i) {
        if (++pos[i] < taps[i].count)
          break;
        pos[i] = 0;
      }
      if (i == d)
        break;
    }
  }
}

//! Value of psi^v_{l,k}(x) = prod_i 2^{l/2} psi^{v_i}(2^l x_i - k_i), periodized.
//! Throws std::out_of_range for a bad level, translate or orientation.
double eval_basis(const WaveletBasis& basis, int level, const Eigen::VectorXi& k, Orientation v,
                  const PointRef& x);

//! Projection kernel onto the level-j scaling space:
//! sum_k phi_{j,k}(x1) phi_{j,k}(x2) with tensor phi. Haar: 2^{jd} on a shared cell.
double kernel_v(const WaveletBasis& basis, int level, const PointRef& x1, const PointRef& x2);

//! Projection kernel onto the level-j detail space (orientations v != 0).
double kernel_w(const WaveletBasis& basis, int level, const PointRef& x1, const PointRef& x2);

//! Number of coefficients per orientation at a level: 2^{level d}.
inline Eigen::Index block_size(int level, int dim)
{
  return Eigen::Index{ 1 } << (level * dim);
}

} // namespace binreg
