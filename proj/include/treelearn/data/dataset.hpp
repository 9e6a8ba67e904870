#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "treelearn/data/example.hpp"

namespace treelearn {

// In-memory shard in compressed-row form. Every index is < dimension().
class Dataset {
 public:
  explicit Dataset(int bits);

  int bits() const { return bits_; }
  size_t dimension() const { return size_t{1} << bits_; }
  size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  size_t nonzeros() const { return indices_.size(); }

  void push_back(const SparseExample& example);
  ExampleView operator[](size_t i) const;
  SparseExample example(size_t i) const;

 private:
  int bits_;
  std::vector<double> labels_;
  std::vector<double> importance_;
  std::vector<size_t> offsets_{0};
  std::vector<uint32_t> indices_;
  std::vector<double> values_;
};

// Blank lines are skipped; ParseError carries the 1-based line number.
Dataset read_dataset(std::istream& in, int bits);
Dataset load_dataset(const std::filesystem::path& path, int bits);

// Example i goes to part i mod m; the in-memory twin of shard_dataset.
std::vector<Dataset> split_round_robin(const Dataset& data, uint32_t parts);

}  // namespace treelearn
