#pragma once

#include "binreg/wavelet_basis.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace binreg {

//! n covariate vectors in [0,1]^d (column per observation) with binary labels.
struct Dataset
{
  PointMatrix x;
  Eigen::VectorXd y;

  Eigen::Index size() const { return y.size(); }
  int dim() const { return static_cast<int>(x.rows()); }

  //! Throws std::invalid_argument on shape mismatch, labels outside {0,1} or
  //! covariates outside [0,1].
  void validate() const;

  //! Observations [begin, begin + count).
  Dataset slice(Eigen::Index begin, Eigen::Index count) const;
};

//! Splits into `parts` contiguous blocks of floor(n / parts) observations;
//! the remainder is discarded. With a permutation seed the observations are
//! shuffled first (deterministically) before cutting.
std::vector<Dataset> split_dataset(const Dataset& data, int parts,
                                   std::optional<std::uint64_t> permutation_seed = std::nullopt);

} // namespace binreg
