#include "treelearn/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

#include "treelearn/data/hashing.hpp"

namespace treelearn {

SyntheticData generate_logistic(const SyntheticConfig& config) {
  check_hash_bits(config.bits);
  const size_t d = size_t{1} << config.bits;
  if (config.nonzeros + 1 > d) throw std::invalid_argument("more nonzeros than dimensions");
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, config.weight_scale / std::sqrt(static_cast<double>(config.nonzeros)));
  std::uniform_int_distribution<uint32_t> pick(1, static_cast<uint32_t>(d - 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // a fixed count would make the feature columns sum to a multiple of the bias
  const size_t most = std::min<size_t>(2 * config.nonzeros - 1, d - 1);
  std::uniform_int_distribution<size_t> count(std::min<size_t>(1, most), most);

  SyntheticData out{Dataset(config.bits), std::vector<double>(d)};
  for (double& w : out.true_weights) w = normal(rng);
  std::vector<Feature> features;
  for (size_t i = 0; i < config.examples; ++i) {
    features.assign(1, Feature{0, 1.0});
    const size_t k = count(rng);
    while (features.size() < k + 1) {
      uint32_t j = pick(rng);
      if (std::none_of(features.begin(), features.end(), [j](const Feature& f) { return f.index == j; })) {
        features.push_back({j, 1.0});
      }
    }
    std::sort(features.begin(), features.end(), [](const Feature& a, const Feature& b) { return a.index < b.index; });
    double margin = 0.0;
    for (const Feature& f : features) margin += out.true_weights[f.index] * f.value;
    const double p = 1.0 / (1.0 + std::exp(-margin));
    out.data.push_back({unit(rng) < p ? 1.0 : 0.0, 1.0, features});
  }
  return out;
}

void write_dataset(std::ostream& out, const Dataset& data) {
  for (size_t i = 0; i < data.size(); ++i) out << to_text(data.example(i)) << '\n';
}

}  // namespace treelearn
