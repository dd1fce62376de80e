#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace dstack {

// All randomness goes through std::mt19937_64, whose output sequence is fixed
// by the standard. The helpers below avoid std::*_distribution so results are
// bit-identical across standard library implementations.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and a list of indices.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  return splitmix64(splitmix64(splitmix64(base ^ splitmix64(a)) ^ b) ^ c);
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform in the open interval (0, 1).
inline double uniform_open01(Rng& rng) {
  double u;
  do {
    u = uniform01(rng);
  } while (u == 0.0);
  return u;
}

// Uniform integer in [lo, hi] (inclusive), rejection sampled.
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  if (hi <= lo) return lo;
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return lo + static_cast<std::int64_t>(x % span);
}

inline double standard_normal(Rng& rng) {
  const double u1 = uniform_open01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Samples an index from an unnormalized non-negative weight vector. Returns
// the last positive index if rounding leaves residual mass.
template <typename Range>
int sample_index(Rng& rng, const Range& weights) {
  double total = 0;
  for (double w : weights) total += w;
  double u = uniform01(rng) * total;
  int last = -1;
  int i = 0;
  for (double w : weights) {
    if (w > 0) {
      last = i;
      if (u < w) return i;
      u -= w;
    }
    ++i;
  }
  return last;
}

template <typename T>
void shuffle(Rng& rng, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace dstack
