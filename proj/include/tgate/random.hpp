#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tgate {

using Engine = std::mt19937_64;

/// Derives an independent stream seed from a master seed and a path of
/// stream identifiers (trial index, channel, ...), via splitmix64 mixing.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  for (auto id : path) h = mix(h ^ mix(id));
  return h;
}

inline Engine make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> path = {}) {
  return Engine(derive_seed(master, path));
}

}  // namespace tgate
