#pragma once

#include <cstdint>
#include <random>

namespace lifi {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent child seeds from a master
/// seed and a stream index so that sample i never depends on sample j.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return mix_seed(mix_seed(mix_seed(master) ^ stream) ^ index);
}

// Stream tags for derive_seed.
namespace stream {
inline constexpr std::uint64_t kSample = 0x5a4d;
inline constexpr std::uint64_t kSplit = 0x5b17;
inline constexpr std::uint64_t kTrain = 0x7a1e;
inline constexpr std::uint64_t kInit = 0x1417;
inline constexpr std::uint64_t kSlot = 0x5107;
inline constexpr std::uint64_t kSolver = 0xcc9;
inline constexpr std::uint64_t kNoise = 0x9015e;
}  // namespace stream

}  // namespace lifi
