#ifndef SEGCAL_RNG_HPP
#define SEGCAL_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace segcal {

// splitmix64 finalizer, used to mix seed components into substream seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a deterministic substream seed from a master seed and a path of
// indices, e.g. substream(seed, {member, epoch}). Order-sensitive.
inline std::uint64_t substream(std::uint64_t seed,
                               std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed);
  for (auto p : path) h = mix64(h ^ mix64(p));
  return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> path = {}) {
  return std::mt19937_64(substream(seed, path));
}

}  // namespace segcal

#endif
