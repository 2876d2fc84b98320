#ifndef THMM_RNG_HPP
#define THMM_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace thmm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for a named stage ("init", "shuffle", "split", ...)
/// so that enabling one stage never shifts the draws of another.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::string_view name,
                                  std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return std::mt19937_64(splitmix64(splitmix64(seed ^ h) + index));
}

/// Uniform draw in [0, 1) from the top 53 bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform index in [0, n) by rejection; platform independent.
inline std::uint64_t uniform_index(std::mt19937_64& gen, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = gen();
  } while (x >= limit);
  return x % n;
}

/// Fisher-Yates with uniform_index, so shuffles are reproducible across
/// standard library implementations.
template <typename RandomIt>
void shuffle(RandomIt first, RandomIt last, std::mt19937_64& gen) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(gen, i);
    std::swap(first[i - 1], first[j]);
  }
}

}  // namespace thmm

#endif  // THMM_RNG_HPP
