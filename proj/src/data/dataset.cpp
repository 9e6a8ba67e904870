#include "treelearn/data/dataset.hpp"

#include <fstream>
#include <istream>
#include <stdexcept>

#include "treelearn/data/hashing.hpp"
#include "treelearn/errors.hpp"

namespace treelearn {

Dataset::Dataset(int bits) : bits_(bits) { check_hash_bits(bits); }

void Dataset::push_back(const SparseExample& example) {
  for (const auto& f : example.features) {
    if (f.index >= dimension()) {
      throw DimensionError("feature index " + std::to_string(f.index) + " outside 2^" +
                           std::to_string(bits_));
    }
  }
  labels_.push_back(example.label);
  importance_.push_back(example.importance);
  for (const auto& f : example.features) {
    indices_.push_back(f.index);
    values_.push_back(f.value);
  }
  offsets_.push_back(indices_.size());
}

ExampleView Dataset::operator[](size_t i) const {
  const size_t begin = offsets_[i], end = offsets_[i + 1];
  return {labels_[i], importance_[i],
          std::span<const uint32_t>(indices_.data() + begin, end - begin),
          std::span<const double>(values_.data() + begin, end - begin)};
}

SparseExample Dataset::example(size_t i) const {
  auto v = (*this)[i];
  SparseExample ex{v.label, v.importance, {}};
  for (size_t k = 0; k < v.indices.size(); ++k) ex.features.push_back({v.indices[k], v.values[k]});
  return ex;
}

Dataset read_dataset(std::istream& in, int bits) {
  Dataset data(bits);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    data.push_back(parse_example(line, bits, lineno));
  }
  if (in.bad()) throw IoError("read failure at line " + std::to_string(lineno));
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, int bits) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  try {
    return read_dataset(in, bits);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::vector<Dataset> split_round_robin(const Dataset& data, uint32_t parts) {
  if (parts == 0) throw std::invalid_argument("split_round_robin: zero parts");
  std::vector<Dataset> out(parts, Dataset(data.bits()));
  for (size_t i = 0; i < data.size(); ++i) out[i % parts].push_back(data.example(i));
  return out;
}

}  // namespace treelearn
