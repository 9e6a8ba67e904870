#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace treelearn {

struct Feature {
  uint32_t index = 0;
  double value = 1.0;
  bool operator==(const Feature&) const = default;
};

// One training row. Features are sorted by index with duplicates merged.
struct SparseExample {
  double label = 0.0;
  double importance = 1.0;
  std::vector<Feature> features;
  bool operator==(const SparseExample&) const = default;
};

// Non-owning view of a row stored in a Dataset.
struct ExampleView {
  double label = 0.0;
  double importance = 1.0;
  std::span<const uint32_t> indices;
  std::span<const double> values;
};

// Parses `label [importance] | name[:value] ...`. A token of the form
// `#<n>` names hashed index n directly (the form `to_text` writes).
// Throws ParseError carrying `line_number`.
SparseExample parse_example(std::string_view line, int bits, size_t line_number = 0);

// Sorts by index and sums values of repeated indices.
void canonicalize(std::vector<Feature>& features);

// Text form that parses back to the same example.
std::string to_text(const SparseExample& example);

}  // namespace treelearn
