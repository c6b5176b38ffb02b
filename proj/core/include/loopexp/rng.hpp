#pragma once

#include <cstdint>
#include <random>

namespace loopexp {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent per-trial stream seed keyed by (master seed, trial index).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                    std::uint64_t stream = 0) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL * (stream + 1)));
}

}  // namespace loopexp
