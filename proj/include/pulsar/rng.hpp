#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pulsar::rng {

// Counter-based generator in the spirit of splitmix64 / Random123: every
// variate is a pure function of an explicit key tuple, so results do not
// depend on evaluation order or thread scheduling.

inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Domain-separation tags keep independent draw streams from colliding even
// when their counters coincide.
enum Stream : std::uint64_t {
  kStreamJitter = 101,
  kStreamAmplitude = 102,
  kStreamNoise = 103,
  kStreamScene = 104,
  kStreamWeights = 105,
};

inline std::uint64_t key(std::uint64_t a) { return mix(a); }
inline std::uint64_t key(std::uint64_t a, std::uint64_t b) {
  return mix(mix(a) ^ b);
}
inline std::uint64_t key(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(key(a, b) ^ c);
}
inline std::uint64_t key(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                         std::uint64_t d) {
  return mix(key(a, b, c) ^ d);
}

/// Uniform in [0, 1) with 53 random bits.
inline double unit(std::uint64_t k) { return double(k >> 11) * 0x1.0p-53; }

inline double uniform(std::uint64_t k, double lo, double hi) {
  return lo + (hi - lo) * unit(k);
}

/// Standard normal via Box-Muller from two independent keys. Uses the open
/// interval (0, 1] for the radial draw so the log never sees zero.
inline double gaussian(std::uint64_t k1, std::uint64_t k2) {
  double u1 = double((k1 >> 11) + 1) * 0x1.0p-53;
  double u2 = unit(k2);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pulsar::rng
