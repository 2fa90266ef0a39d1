#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace odrepair {

/* Deterministic randomness utilities.
 *
 * Everything downstream of a seed must reproduce bit-for-bit across
 * platforms and standard libraries, so we avoid std::hash and the
 * std::*_distribution classes (their outputs are implementation-defined)
 * and draw from std::mt19937_64 directly.
 */

using Rng = std::mt19937_64;

// 64-bit FNV-1a. Stable string hash used for seed derivation and checksums.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Finalizer from the splitmix64 generator; scrambles correlated seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// One master seed fans out into independent named streams so that adding
// draws to one stage never shifts the sequence seen by another.
inline std::uint64_t substream_seed(std::uint64_t master, std::string_view name) {
  return splitmix64(master ^ fnv1a64(name));
}

inline Rng make_rng(std::uint64_t master, std::string_view name) {
  return Rng(substream_seed(master, name));
}

// Unbiased integer in [0, n). Rejection on the top slice of the 64-bit range.
inline std::uint64_t draw_below(Rng& rng, std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

// Inclusive integer range.
inline std::int64_t draw_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(
                  draw_below(rng, static_cast<std::uint64_t>(hi - lo) + 1));
}

// Uniform double in [0, 1) with 53 random bits.
inline double draw_unit(Rng& rng) { return (rng() >> 11) * 0x1.0p-53; }

// Fisher-Yates; unlike std::shuffle the draw sequence is ours, hence stable.
template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(draw_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace odrepair
