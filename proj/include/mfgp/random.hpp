#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mfgp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Counter-based child seed: independent of the order in which children are
/// requested.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t counter) {
  return splitmix64(splitmix64(parent) ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
}

/// seed_r = derive_seed(derive_seed(master, fnv1a(problem)), r).
constexpr std::uint64_t repetition_seed(std::uint64_t master,
                                        std::string_view problem,
                                        std::uint64_t repetition) {
  return derive_seed(derive_seed(master, fnv1a(problem)), repetition);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace mfgp
