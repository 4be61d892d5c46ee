#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace cfb {

/// splitmix64; used to derive independent per-image / per-step streams
/// from one master seed so parallel and serial generation agree.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(master ^ mix64(stream + 0x5851f42d4c957f2dULL));
}

/// Deterministic uniform in [0,1) from raw mt19937_64 output; avoids the
/// implementation-defined behavior of std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * (1.0 / 9007199254740992.0);
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

/// Uniform integer in [0, n) by rejection; deterministic across platforms.
inline std::uint64_t uniform_index(std::mt19937_64& g, std::uint64_t n) {
  const std::uint64_t limit = ~0ULL - (~0ULL % n);
  std::uint64_t r;
  do {
    r = g();
  } while (r >= limit);
  return r % n;
}

template <typename T>
void shuffle_indices(std::vector<T>& v, std::mt19937_64& g) {
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(uniform_index(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace cfb
