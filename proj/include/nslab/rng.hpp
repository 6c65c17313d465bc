#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace nslab::rng {

// splitmix64-style avalanche; the basis of all counter-based randomness here.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform deviate in (0, 1]; never zero, so log() is safe.
inline double uniform01(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Pair of independent standard normals from two 64-bit words (Box-Muller).
inline std::pair<double, double> normal_pair(std::uint64_t w1, std::uint64_t w2) {
  const double u1 = uniform01(w1);
  const double u2 = uniform01(w2);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace nslab::rng
