#pragma once

#include <cstdint>
#include <random>

namespace lobfeat {

/// SplitMix64 finaliser; derives independent child seeds from one global
/// seed so any stage can be re-run alone and draw the same stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(derive_seed(seed, stream));
}

/// Named streams so call sites don't collide.
namespace stream {
inline constexpr std::uint64_t kSynthetic = 1;
inline constexpr std::uint64_t kUndersample = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kShuffle = 4;
inline constexpr std::uint64_t kDropout = 5;
}  // namespace stream

}  // namespace lobfeat
