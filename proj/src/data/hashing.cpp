#include "treelearn/data/hashing.hpp"

#include <stdexcept>
#include <string>

namespace treelearn {

void check_hash_bits(int bits) {
  if (bits < 1 || bits > 31) {
    throw std::invalid_argument("hash bits must be in [1, 31], got " + std::to_string(bits));
  }
}

uint32_t hash_feature(std::string_view name, int bits) {
  check_hash_bits(bits);
  return static_cast<uint32_t>(fnv1a64(name) & ((uint64_t{1} << bits) - 1));
}

}  // namespace treelearn
