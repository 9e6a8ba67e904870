#pragma once

#include <cstddef>
#include <string_view>

#include "treelearn/data/dataset.hpp"
#include "treelearn/model/objective.hpp"

namespace treelearn {

enum class Invariance { importance_aware, plain };

std::string_view to_string(Invariance inv);
Invariance parse_invariance(std::string_view name);

struct OnlineConfig {
  double eta = 0.5;
  Invariance invariance = Invariance::importance_aware;
  int passes = 1;
};

// Weights plus the adaptive scaling diagonal G (accumulated squared
// gradients, starting at 1).
struct ModelState {
  DenseVector w;
  DenseVector scaling;

  static ModelState initial(size_t dimension) {
    return {DenseVector(dimension, 0.0), DenseVector(dimension, 1.0)};
  }
};

struct StepResult {
  double s = 0.0;
  bool fell_back = false;  // logistic root finding did not converge; s is the plain rate
};

// Step multiplier for w -= s * G^{-1/2} g, where g is the importance-weighted
// example gradient and `scaled_norm` is q = sum_j x_j^2 G_jj^{-1/2} over the
// example's support. The importance-aware step equals integrating the
// gradient flow of importance * loss along G^{-1/2} x for time eta.
StepResult invariance_step(double margin, double label, double importance, double scaled_norm, double eta,
                           LossKind loss, Invariance invariance);

struct PassStats {
  size_t examples = 0;
  size_t fallbacks = 0;
  double progressive_loss = 0.0;  // importance-weighted loss of each example before its update
};

// One sequential pass over the shard. No communication.
PassStats sgd_pass(const Dataset& shard, ModelState& model, const OnlineConfig& config, LossKind loss);

}  // namespace treelearn
