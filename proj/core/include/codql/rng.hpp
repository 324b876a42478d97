#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace codql {

using Rng = std::mt19937_64;

/// Derives an independent seed for the named stream from a root seed.
/// Streams used across the project: "sim", "exploration", "replay",
/// "init", "eval", "coin", "policy".
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

/// Uniform integer in [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline bool coin_flip(Rng& rng) { return (rng() >> 63) != 0; }

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t seed = 0xcbf29ce484222325ULL);
inline std::uint64_t fnv1a(std::string_view s) { return fnv1a(s.data(), s.size()); }

}  // namespace codql
