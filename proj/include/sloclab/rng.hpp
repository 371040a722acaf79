#pragma once

#include <cstdint>
#include <random>

namespace sloclab {

using Rng = std::mt19937_64;

// SplitMix64 finaliser; decorrelates (seed, index) pairs.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent stream for work unit `index` of a run seeded with `seed`.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL)));
}

// Stream tags separate the purposes a single seed is used for.
enum class StreamTag : std::uint64_t {
  Paths = 1,
  Fresh = 2,
  Marginal = 3,
  Entropy = 4,
  Probe = 5,
};

inline Rng make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index) {
  return make_stream(mix64(seed + static_cast<std::uint64_t>(tag)), index);
}

}  // namespace sloclab
