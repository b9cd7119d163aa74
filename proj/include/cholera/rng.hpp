#pragma once

#include <cstdint>
#include <random>

namespace cholera {

using Rng = std::mt19937_64;

/// Recorded in run manifests so replicas can be regenerated elsewhere.
inline constexpr const char* kRngAlgorithm = "mt19937_64, seeded per stream by splitmix64(master_seed, stream)";

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent generator for replica `stream` of a run seeded with `master_seed`.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t stream)
{
  const std::uint64_t a = splitmix64(master_seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

}  // namespace cholera
