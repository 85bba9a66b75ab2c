#ifndef COLLABVIZ_RANDOM_HPP_
#define COLLABVIZ_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace collabviz {

/// The one generator type used throughout. Every chain, split and replica
/// owns its own instance.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer over (seed, stream): maps a base seed and a stream
/// index to a well-separated child seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

}  // namespace collabviz

#endif  // COLLABVIZ_RANDOM_HPP_
