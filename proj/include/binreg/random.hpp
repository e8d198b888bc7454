#pragma once

#include <cstdint>
#include <random>

namespace binreg {

//! SplitMix64 finalizer; used to derive well-separated stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Seed of replicate stream `index` under a master seed.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index)
{
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

//! mt19937_64 wrapper whose draws do not depend on the standard library's
//! distribution implementations, so streams agree across platforms.
class Rng
{
public:
  explicit Rng(std::uint64_t seed)
    : engine_(seed)
  {}
  Rng(std::uint64_t seed, std::uint64_t stream)
    : engine_(stream_seed(seed, stream))
  {}

  std::uint64_t next() { return engine_(); }

  //! Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  //! Uniform integer in [0, bound) by rejection, bound > 0.
  std::uint64_t below(std::uint64_t bound)
  {
    const std::uint64_t limit = ~std::uint64_t{ 0 } - (~std::uint64_t{ 0 } % bound);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % bound;
  }

  bool bernoulli(double p) { return uniform() < p; }
  int sign() { return (engine_() >> 63) ? 1 : -1; }

private:
  std::mt19937_64 engine_;
};

} // namespace binreg
