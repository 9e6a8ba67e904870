#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace treelearn {

struct Scored {
  double score = 0.0;
  double label = 0.0;  // positive when > 0.5
};

// Trapezoidal area under the ROC curve; tied scores form one step.
// Throws MetricUndefined without both classes.
double auroc(std::span<const Scored> set);

// Sum of precision * recall increment over a descending-score sweep, tied
// scores forming one threshold. Throws MetricUndefined without positives.
double auprc(std::span<const Scored> set);

// Mean negative log-likelihood with probabilities clamped to [1e-15, 1 - 1e-15].
double nll(std::span<const Scored> probabilities);

enum class CostFamily { hybrid, bundle, online, overcomplete, minibatch_dense, minibatch_sparse, parallel_online };

std::string_view to_string(CostFamily family);
CostFamily parse_cost_family(std::string_view name);

struct CostInputs {
  std::optional<double> m, n, s, d, T, b, rep;
};

struct CostEstimate {
  std::string formula;
  double value = 0.0;
};

// Per-node communication volume with unit constants. Throws
// std::invalid_argument when a required input is missing or not positive.
CostEstimate comm_cost(CostFamily family, const CostInputs& in);

}  // namespace treelearn
