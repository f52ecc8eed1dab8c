#pragma once

#include <cstdint>
#include <random>

namespace otgrowth {

// SplitMix64 finalizer. Used as the counter-based derivation of per-chunk
// seeds: chunk c of a stream seeded with s always gets mix(s, c), so results
// do not depend on how chunks are scheduled.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  return Engine(derive_seed(seed, stream));
}

// Samples are produced in fixed-size chunks; chunk k uses its own engine.
inline constexpr std::size_t kSampleChunk = 4096;

}  // namespace otgrowth
