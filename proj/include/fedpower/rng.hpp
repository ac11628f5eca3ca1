#pragma once

#include <cstdint>
#include <random>

namespace fedpower {

// 64-bit mix (splitmix64 finalizer), used to derive well-separated seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a stream seed from a master seed and up to two stream indices
// (device, round, run, ...). Streams with distinct indices are independent,
// so per-device draws do not depend on iteration order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t s0 = 0,
                                 std::uint64_t s1 = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ (s0 + 0x9e3779b97f4a7c15ULL));
  h = mix64(h ^ (s1 + 0xbf58476d1ce4e5b9ULL));
  return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t s0 = 0,
                                   std::uint64_t s1 = 0) {
  return std::mt19937_64(derive_seed(seed, s0, s1));
}

}  // namespace fedpower
