#pragma once

#include <cstdint>

namespace seqsim::rng {

// Counter-based uniform streams. Every draw is a keyed hash of
// (seed, patient, cycle, slot), so any draw can be replayed in isolation
// and the value a simulation sees never depends on evaluation order,
// thread count, or how many other draws were consumed.

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t keyed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                           std::uint64_t c) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

// Uniform on [0, 1) with 53-bit resolution.
inline double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                      std::uint64_t c) {
  return static_cast<double>(keyed(seed, a, b, c) >> 11) * 0x1.0p-53;
}

} // namespace seqsim::rng
