#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hcdn {

/// Uniform double in [0, 1) from the top 53 bits. Used instead of
/// std::uniform_real_distribution so that sampled sequences are identical
/// across standard-library implementations.
inline double rng_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double rng_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + rng_unit(rng) * (hi - lo);
}

inline bool rng_bernoulli(std::mt19937_64& rng, double p) {
  return rng_unit(rng) < p;
}

/// Uniform integer in [0, n). Modulo bias is negligible for the small n
/// used here and keeps the draw portable.
inline std::uint64_t rng_below(std::mt19937_64& rng, std::uint64_t n) {
  return n ? rng() % n : 0;
}

/// Portable Fisher-Yates shuffle (std::shuffle is implementation-defined).
template <typename Vec>
void rng_shuffle(std::mt19937_64& rng, Vec& items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Standard normal via Box-Muller (again for cross-platform determinism).
inline double rng_normal(std::mt19937_64& rng) {
  double u1 = 0.0;
  do {
    u1 = rng_unit(rng);
  } while (u1 <= 1e-300);
  double u2 = rng_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

/// Mixes a base seed with a stream index into a fresh seed.
inline std::uint64_t rng_derive(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace hcdn
