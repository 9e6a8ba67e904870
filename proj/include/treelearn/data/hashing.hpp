#pragma once

#include <cstdint>
#include <string_view>

namespace treelearn {

inline constexpr uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;
inline constexpr int kDefaultHashBits = 18;

constexpr uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = kFnvOffsetBasis;
  for (char c : bytes) {
    h ^= static_cast<uint8_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

// Feature name -> index in [0, 2^bits). Throws std::invalid_argument unless
// 1 <= bits <= 31.
uint32_t hash_feature(std::string_view name, int bits);

void check_hash_bits(int bits);

}  // namespace treelearn
