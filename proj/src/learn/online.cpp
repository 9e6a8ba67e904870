#include "treelearn/learn/online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "treelearn/errors.hpp"

namespace treelearn {

std::string_view to_string(Invariance inv) {
  return inv == Invariance::plain ? "plain" : "importance";
}

Invariance parse_invariance(std::string_view name) {
  if (name == "plain") return Invariance::plain;
  if (name == "importance" || name == "importance-aware") return Invariance::importance_aware;
  throw std::invalid_argument("unknown invariance '" + std::string(name) + "'");
}

namespace {

constexpr int kMaxNewton = 50;
constexpr double kResidualTol = 1e-10;

// Root of a*d + b*expm1(d) = c on [0, hi] with a, b, c >= 0. The left side is
// increasing and convex, so Newton from the right end stays in the bracket
// barring rounding; bisection covers that case.
bool solve_logistic_flow(double a, double b, double c, double& delta) {
  double lo = 0.0;
  double hi = std::min(c / a, std::log1p(c / b));
  double d = hi;
  for (int it = 0; it < kMaxNewton; ++it) {
    const double f = a * d + b * std::expm1(d) - c;
    if (std::abs(f) <= kResidualTol * std::max(c, std::numeric_limits<double>::min())) {
      delta = d;
      return true;
    }
    if (f > 0) hi = d; else lo = d;
    double next = d - f / (a + b * std::exp(d));
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - d) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(d)) {
      delta = next;
      return true;
    }
    d = next;
  }
  return false;
}

}  // namespace

StepResult invariance_step(double margin, double label, double importance, double scaled_norm, double eta,
                           LossKind loss, Invariance invariance) {
  if (!(eta > 0)) throw std::invalid_argument("learning rate must be positive");
  StepResult r{eta, false};
  if (invariance == Invariance::plain || scaled_norm <= 0 || importance <= 0) return r;
  const double hq = eta * importance * scaled_norm;
  if (loss == LossKind::squared) {
    r.s = -std::expm1(-hq) / (importance * scaled_norm);
    return r;
  }
  // z = y' * margin follows dz/dt = q * imp / (1 + e^z); integrating to t = eta
  // gives delta + e^{z0} expm1(delta) = hq with delta = z(eta) - z0.
  const double z0 = signed_label(label) * margin;
  double a, b, c;
  if (z0 > 0) {
    a = std::exp(-z0);
    b = 1.0;
    c = hq * a;
  } else {
    a = 1.0;
    b = std::exp(z0);
    c = hq;
  }
  if (c <= 0 || b <= 0) return r;
  double delta = 0.0;
  if (!solve_logistic_flow(a, b, c, delta)) {
    r.fell_back = true;
    return r;
  }
  if (delta <= 0) return r;
  // the example gradient carries the factor sigma(-z0) = 1 / (1 + e^{z0})
  r.s = (delta + std::exp(z0 + std::log(delta))) / (importance * scaled_norm);
  return r;
}

PassStats sgd_pass(const Dataset& shard, ModelState& model, const OnlineConfig& config, LossKind loss) {
  if (model.scaling.size() != model.w.size()) throw DimensionError("scaling diagonal does not match weights");
  check_dimension(shard, model.w.size());
  PassStats stats;
  double* w = model.w.data();
  double* G = model.scaling.data();
  for (size_t i = 0; i < shard.size(); ++i) {
    const ExampleView x = shard[i];
    const double margin = margin_unchecked(model.w, x);
    stats.progressive_loss += loss_value(loss, margin, x.label) * x.importance;
    const double slope = loss_slope(loss, margin, x.label) * x.importance;
    ++stats.examples;
    if (slope == 0) continue;
    double q = 0.0;
    for (size_t k = 0; k < x.indices.size(); ++k) q += x.values[k] * x.values[k] / std::sqrt(G[x.indices[k]]);
    StepResult step = invariance_step(margin, x.label, x.importance, q, config.eta, loss, config.invariance);
    stats.fallbacks += step.fell_back;
    for (size_t k = 0; k < x.indices.size(); ++k) {
      const uint32_t j = x.indices[k];
      const double g = slope * x.values[k];
      w[j] -= step.s * g / std::sqrt(G[j]);
      G[j] += g * g;
    }
  }
  return stats;
}

}  // namespace treelearn
