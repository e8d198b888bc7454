#include "binreg/dataset.hpp"

#include "binreg/random.hpp"

#include <numeric>
#include <stdexcept>

namespace binreg {

void Dataset::validate() const
{
  if (x.cols() != y.size())
    throw std::invalid_argument("dataset: covariates and labels differ in length");
  if (x.rows() < 1 || x.rows() > kMaxDim)
    throw std::invalid_argument("dataset: dimension must be in [1, 3]");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw std::invalid_argument("dataset: labels must be 0 or 1");
  if (x.size() > 0 && (!x.allFinite() || x.minCoeff() < 0.0 || x.maxCoeff() > 1.0))
    throw std::invalid_argument("dataset: covariates must lie in [0,1]");
}

Dataset Dataset::slice(Eigen::Index begin, Eigen::Index count) const
{
  if (begin < 0 || count < 0 || begin + count > size())
    throw std::out_of_range("dataset slice out of range");
  return { x.middleCols(begin, count), y.segment(begin, count) };
}

std::vector<Dataset> split_dataset(const Dataset& data, int parts,
                                   std::optional<std::uint64_t> permutation_seed)
{
  if (parts < 1)
    throw std::invalid_argument("split needs at least one part");
  const Eigen::Index block = data.size() / parts;
  if (block < 1)
    throw std::invalid_argument("dataset too small to split into " + std::to_string(parts) +
                                " parts");

  const Dataset* source = &data;
  Dataset shuffled;
  if (permutation_seed) {
    std::vector<Eigen::Index> order(data.size());
    std::iota(order.begin(), order.end(), Eigen::Index{ 0 });
    Rng rng(*permutation_seed);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    shuffled.x.resize(data.x.rows(), data.size());
    shuffled.y.resize(data.size());
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      shuffled.x.col(i) = data.x.col(order[i]);
      shuffled.y[i] = data.y[order[i]];
    }
    source = &shuffled;
  }

  std::vector<Dataset> out;
  out.reserve(parts);
  for (int p = 0; p < parts; ++p)
    out.push_back(source->slice(p * block, block));
  return out;
}

} // namespace binreg
