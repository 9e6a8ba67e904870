#include "treelearn/data/shard.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "treelearn/data/hashing.hpp"
#include "treelearn/errors.hpp"

namespace treelearn {

void ShardManifest::write_json(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["shards"] = shards;
  j["replication"] = replication;
  j["counts"] = counts;
  std::vector<std::string> p;
  for (const auto& x : paths) p.push_back(x.string());
  j["paths"] = p;
  j["source_digest"] = source_digest;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

ShardManifest shard_dataset(const std::filesystem::path& input, uint32_t shards,
                            const std::filesystem::path& out_dir, uint32_t replication) {
  if (shards == 0) throw std::invalid_argument("shard count must be >= 1");
  if (replication == 0 || replication > shards) {
    throw std::invalid_argument("replication must be in [1, shards]");
  }
  std::ifstream in(input, std::ios::binary);
  if (!in) throw IoError("cannot open '" + input.string() + "' for sharding");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  ShardManifest m;
  m.shards = shards;
  m.replication = replication;
  m.counts.assign(shards, 0);
  std::vector<std::ofstream> outs;
  for (uint32_t k = 0; k < shards; ++k) {
    m.paths.push_back(out_dir / ("shard-" + std::to_string(k) + ".txt"));
    outs.emplace_back(m.paths.back(), std::ios::binary);
    if (!outs.back()) throw IoError("cannot write shard '" + m.paths.back().string() + "'");
  }

  uint64_t digest = kFnvOffsetBasis;
  uint64_t i = 0;
  std::string line;
  while (std::getline(in, line)) {
    for (char c : line) {
      digest ^= static_cast<uint8_t>(c);
      digest *= kFnvPrime;
    }
    digest ^= static_cast<uint8_t>('\n');
    digest *= kFnvPrime;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    for (uint32_t r = 0; r < replication; ++r) {
      uint32_t k = static_cast<uint32_t>((i + r) % shards);
      outs[k] << line << '\n';
      ++m.counts[k];
    }
    ++i;
  }
  if (in.bad()) throw IoError("read failure in '" + input.string() + "'");
  for (uint32_t k = 0; k < shards; ++k) {
    outs[k].close();
    if (!outs[k]) throw IoError("write failure in '" + m.paths[k].string() + "'");
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(digest));
  m.source_digest = hex;
  m.write_json(out_dir / "manifest.json");
  return m;
}

}  // namespace treelearn
