#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "treelearn/data/dataset.hpp"

namespace treelearn {

// Sparse logistic data: each example has between 1 and 2*nonzeros-1 distinct
// features (uniform, so `nonzeros` on average) with unit values plus a bias
// feature at index 0, and its label is drawn from sigmoid(w* . x) for a fixed
// Gaussian w*.
struct SyntheticConfig {
  size_t examples = 10000;
  int bits = 12;
  size_t nonzeros = 10;
  double weight_scale = 1.0;  // std-dev of w* entries, divided by sqrt(nonzeros)
  uint64_t seed = 1;
};

struct SyntheticData {
  Dataset data;
  std::vector<double> true_weights;
};

SyntheticData generate_logistic(const SyntheticConfig& config);

void write_dataset(std::ostream& out, const Dataset& data);

}  // namespace treelearn
