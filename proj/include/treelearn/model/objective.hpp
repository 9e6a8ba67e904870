#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treelearn/data/dataset.hpp"
#include "treelearn/data/example.hpp"

namespace treelearn {

using DenseVector = std::vector<double>;

enum class LossKind : uint8_t { logistic = 0, squared = 1 };

std::string_view to_string(LossKind loss);
LossKind parse_loss(std::string_view name);

// sum_i importance_i * loss(w.x_i; y_i) + lambda/2 * |w|^2
struct Objective {
  LossKind loss = LossKind::logistic;
  double lambda = 0.0;
  size_t dimension = 0;
};

// Logistic loss takes labels in {0, 1} (anything > 0.5 counts as positive)
// and works with y' = +-1 internally. Squared loss takes real labels.
double loss_value(LossKind loss, double margin, double label);
// d loss / d margin
double loss_slope(LossKind loss, double margin, double label);
// d^2 loss / d margin^2
double loss_curvature(LossKind loss, double margin, double label);

inline double signed_label(double label) { return label > 0.5 ? 1.0 : -1.0; }

struct Prediction {
  double margin = 0.0;
  double probability = 0.5;  // logistic: sigmoid(margin); squared: the margin itself
};

// Throws DimensionError when an index falls outside w.
Prediction predict(std::span<const double> w, const ExampleView& x, LossKind loss);

// Caller guarantees every index is inside w.
inline double margin_unchecked(std::span<const double> w, const ExampleView& x) {
  double m = 0.0;
  for (size_t k = 0; k < x.indices.size(); ++k) m += w[x.indices[k]] * x.values[k];
  return m;
}

struct ExampleGradient {
  std::vector<Feature> gradient;  // over the example's support
  double loss = 0.0;              // importance-weighted
};

ExampleGradient example_gradient(std::span<const double> w, const ExampleView& x, LossKind loss);

// Local sums over one shard, regularization excluded.
struct LocalSums {
  double loss = 0.0;
  DenseVector gradient;
};

LocalSums batch_objective_and_gradient(std::span<const double> w, const Dataset& shard, LossKind loss);

// Adds the shard's gradient into `grad` and returns the shard's loss sum.
double accumulate_loss_and_gradient(std::span<const double> w, const Dataset& shard, LossKind loss,
                                    std::span<double> grad);
double local_loss(std::span<const double> w, const Dataset& shard, LossKind loss);
// Adds sum_i importance_i * x_ij^2 * loss''(margin_i) into `diag`.
void accumulate_hessian_diagonal(std::span<const double> w, const Dataset& shard, LossKind loss,
                                 std::span<double> diag);
DenseVector hessian_diagonal(std::span<const double> w, const Dataset& shard, LossKind loss);

double regularizer(std::span<const double> w, double lambda);

// Loss sum plus regularizer on a single shard.
double objective_value(std::span<const double> w, const Dataset& data, const Objective& objective);

// Throws DimensionError if the shard's hash space exceeds `dimension`.
void check_dimension(const Dataset& shard, size_t dimension);

}  // namespace treelearn
