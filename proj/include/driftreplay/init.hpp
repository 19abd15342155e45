#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "driftreplay/matrix.hpp"

namespace driftreplay {

/// Mixes a base seed with a stream index (epoch, stage, ...) into a fresh
/// engine seed. splitmix64 finalizer; stable across platforms.
inline std::uint32_t mix_seed(std::uint32_t seed, std::uint64_t stream) {
  std::uint64_t z = (static_cast<std::uint64_t>(seed) << 32) ^ (stream + 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z = z ^ (z >> 31);
  return static_cast<std::uint32_t>(z ^ (z >> 32));
}

/// Fills m with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) draws.
inline void init_uniform(Matrix& m, std::mt19937& gen, std::size_t fan_in) {
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : m.data) x = dist(gen);
}

}  // namespace driftreplay
