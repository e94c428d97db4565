#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace drdb {

// Domain tags keep derived streams for unrelated purposes disjoint even when
// their numeric ids collide (fold 3 vs replication 3).
namespace rng_domain {
inline constexpr std::uint64_t kFoldSplit = 0x101;
inline constexpr std::uint64_t kFold = 0x102;
inline constexpr std::uint64_t kDgp = 0x201;
inline constexpr std::uint64_t kMethod = 0x202;
}  // namespace rng_domain

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic seed derivation: hashes the master seed together with a path
// of ids, so (seed, fold) and (seed, replication, method) streams never
// overlap regardless of evaluation order or thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ULL);
  for (std::uint64_t v : path) h = splitmix64(h ^ v);
  return h;
}

inline std::mt19937_64 make_stream(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path) {
  return std::mt19937_64(derive_seed(seed, path));
}

// Unbiased integer in [0, bound) via rejection sampling. Used instead of
// std::uniform_int_distribution so fold plans reconstruct bit-identically
// across standard library implementations.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = -bound % bound;  // 2^64 mod bound
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace drdb
