#include "treelearn/model/objective.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "treelearn/errors.hpp"

namespace treelearn {

std::string_view to_string(LossKind loss) {
  return loss == LossKind::logistic ? "logistic" : "squared";
}

LossKind parse_loss(std::string_view name) {
  if (name == "logistic") return LossKind::logistic;
  if (name == "squared") return LossKind::squared;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

namespace {

// 1 / (1 + exp(-z)) without overflow.
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(-z))
double log1p_exp_neg(double z) {
  if (z > 0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

}  // namespace

double loss_value(LossKind loss, double margin, double label) {
  if (loss == LossKind::squared) {
    double r = margin - label;
    return 0.5 * r * r;
  }
  return log1p_exp_neg(signed_label(label) * margin);
}

double loss_slope(LossKind loss, double margin, double label) {
  if (loss == LossKind::squared) return margin - label;
  double y = signed_label(label);
  return -y * sigmoid(-y * margin);
}

double loss_curvature(LossKind loss, double margin, double /*label*/) {
  if (loss == LossKind::squared) return 1.0;
  double p = sigmoid(margin);
  return p * (1.0 - p);
}

Prediction predict(std::span<const double> w, const ExampleView& x, LossKind loss) {
  for (uint32_t idx : x.indices) {
    if (idx >= w.size()) {
      throw DimensionError("feature index " + std::to_string(idx) + " outside weight vector of " +
                           std::to_string(w.size()));
    }
  }
  Prediction p;
  p.margin = margin_unchecked(w, x);
  p.probability = loss == LossKind::logistic ? sigmoid(p.margin) : p.margin;
  return p;
}

ExampleGradient example_gradient(std::span<const double> w, const ExampleView& x, LossKind loss) {
  const double m = predict(w, x, loss).margin;
  const double slope = loss_slope(loss, m, x.label) * x.importance;
  ExampleGradient g;
  g.loss = loss_value(loss, m, x.label) * x.importance;
  g.gradient.reserve(x.indices.size());
  for (size_t k = 0; k < x.indices.size(); ++k) {
    g.gradient.push_back({x.indices[k], slope * x.values[k]});
  }
  return g;
}

void check_dimension(const Dataset& shard, size_t dimension) {
  if (shard.dimension() > dimension) {
    throw DimensionError("shard hash space 2^" + std::to_string(shard.bits()) +
                         " exceeds model dimension " + std::to_string(dimension));
  }
}

double accumulate_loss_and_gradient(std::span<const double> w, const Dataset& shard, LossKind loss,
                                    std::span<double> grad) {
  check_dimension(shard, std::min(w.size(), grad.size()));
  double total = 0.0;
  for (size_t i = 0; i < shard.size(); ++i) {
    const ExampleView x = shard[i];
    const double m = margin_unchecked(w, x);
    total += loss_value(loss, m, x.label) * x.importance;
    const double slope = loss_slope(loss, m, x.label) * x.importance;
    for (size_t k = 0; k < x.indices.size(); ++k) grad[x.indices[k]] += slope * x.values[k];
  }
  return total;
}

LocalSums batch_objective_and_gradient(std::span<const double> w, const Dataset& shard, LossKind loss) {
  LocalSums s;
  s.gradient.assign(w.size(), 0.0);
  s.loss = accumulate_loss_and_gradient(w, shard, loss, s.gradient);
  return s;
}

double local_loss(std::span<const double> w, const Dataset& shard, LossKind loss) {
  check_dimension(shard, w.size());
  double total = 0.0;
  for (size_t i = 0; i < shard.size(); ++i) {
    const ExampleView x = shard[i];
    total += loss_value(loss, margin_unchecked(w, x), x.label) * x.importance;
  }
  return total;
}

void accumulate_hessian_diagonal(std::span<const double> w, const Dataset& shard, LossKind loss,
                                 std::span<double> diag) {
  check_dimension(shard, std::min(w.size(), diag.size()));
  for (size_t i = 0; i < shard.size(); ++i) {
    const ExampleView x = shard[i];
    const double c = loss_curvature(loss, margin_unchecked(w, x), x.label) * x.importance;
    for (size_t k = 0; k < x.indices.size(); ++k) {
      diag[x.indices[k]] += c * x.values[k] * x.values[k];
    }
  }
}

DenseVector hessian_diagonal(std::span<const double> w, const Dataset& shard, LossKind loss) {
  DenseVector d(w.size(), 0.0);
  accumulate_hessian_diagonal(w, shard, loss, d);
  return d;
}

double regularizer(std::span<const double> w, double lambda) {
  double s = 0.0;
  for (double x : w) s += x * x;
  return 0.5 * lambda * s;
}

double objective_value(std::span<const double> w, const Dataset& data, const Objective& objective) {
  return local_loss(w, data, objective.loss) + regularizer(w, objective.lambda);
}

}  // namespace treelearn
