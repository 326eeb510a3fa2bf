#pragma once

#include <cstdint>
#include <string_view>

#include "condprob/error.hpp"

namespace condprob {

// Index 0 is reserved for the constant (bias) feature in every hashed
// feature space; hash_feature never returns it.
inline constexpr uint64_t kBiasIndex = 0;

// Default seed for feature hashing. Recorded in model files so that a model
// can only be scored against vectors hashed the same way.
inline constexpr uint64_t kDefaultHashSeed = 0x9e3779b97f4a7c15ull;

// 64-bit finalizer with full avalanche (splitmix64).
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seeded FNV-1a over the bytes followed by an avalanche pass.
inline uint64_t hash_bytes(std::string_view bytes, uint64_t seed) {
  uint64_t h = 0xcbf29ce484222325ull ^ seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return mix64(h);
}

// Maps a feature token into [1, 2^bits): deterministic in (token, bits,
// seed), never the reserved bias index.
inline uint64_t hash_feature(std::string_view token, uint32_t bits,
                             uint64_t seed = kDefaultHashSeed) {
  if (bits < 1 || bits > 31) {
    throw ConfigError("hash bits must be in [1, 31], got " +
                      std::to_string(bits));
  }
  if (token.empty()) throw ConfigError("cannot hash an empty feature token");
  const uint64_t buckets = (uint64_t{1} << bits) - 1;  // excludes bias slot
  return 1 + hash_bytes(token, seed) % buckets;
}

}  // namespace condprob
