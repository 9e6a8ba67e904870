#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace treelearn {

struct ShardManifest {
  uint32_t shards = 0;
  uint32_t replication = 1;
  std::vector<uint64_t> counts;
  std::vector<std::filesystem::path> paths;
  std::string source_digest;  // FNV-1a 64 of the input bytes, hex

  void write_json(const std::filesystem::path& path) const;
};

// Round-robin split of a line-oriented dataset into `shards` files named
// <out_dir>/shard-<k>.txt. With replication r each line is written to the r
// consecutive shards starting at (line mod shards). Blank lines are dropped.
ShardManifest shard_dataset(const std::filesystem::path& input, uint32_t shards,
                            const std::filesystem::path& out_dir, uint32_t replication = 1);

}  // namespace treelearn
