#pragma once

#include <cstdint>

#include "csgm/common.hpp"

namespace csgm {

// Fixed 64-bit mixing primitives. Both parties must compute bit-identical
// hashes, so everything here is specified exactly and never depends on
// platform word order or std::hash.

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Keyed hash of a 16-byte message given as two big-endian u64 words.
inline std::uint64_t keyed_hash64(std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(key ^ 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return h;
}

inline std::uint64_t keyed_hash64(std::uint64_t key, const EdgeId& e) {
  return keyed_hash64(key, e.src, e.dst);
}

// Order-sensitive accumulator for parameter digests.
inline std::uint64_t hash_accumulate(std::uint64_t acc, std::uint64_t word) {
  return mix64(acc ^ 0x9e3779b97f4a7c15ULL ^ word) + (acc << 6) + (acc >> 2);
}

}  // namespace csgm
