#include "treelearn/learn/lbfgs.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "treelearn/errors.hpp"

namespace treelearn {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double precond_norm(std::span<const double> g, std::span<const double> precond) {
  double s = 0.0;
  for (size_t i = 0; i < g.size(); ++i) s += g[i] * g[i] / precond[i];
  return std::sqrt(s);
}

}  // namespace

std::string_view to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::converged: return "converged";
    case LbfgsStatus::stalled: return "stalled";
    case LbfgsStatus::max_iterations: break;
  }
  return "max_iterations";
}

bool LbfgsHistory::push(std::vector<double> s, std::vector<double> y) {
  if (memory_ == 0) return false;
  const double ys = dot(y, s);
  if (!(ys > 1e-12 * std::sqrt(dot(y, y)) * std::sqrt(dot(s, s)))) return false;
  if (pairs_.size() == memory_) pairs_.pop_front();
  pairs_.push_back({std::move(s), std::move(y), 1.0 / ys});
  return true;
}

std::vector<double> LbfgsHistory::direction(std::span<const double> grad, std::span<const double> precond) const {
  const size_t d = grad.size();
  std::vector<double> q(grad.begin(), grad.end());
  std::vector<double> alpha(pairs_.size());
  for (size_t k = pairs_.size(); k-- > 0;) {
    const Pair& p = pairs_[k];
    alpha[k] = p.rho * dot(p.s, q);
    for (size_t j = 0; j < d; ++j) q[j] -= alpha[k] * p.y[j];
  }
  double gamma = 1.0;
  if (!pairs_.empty()) {
    const Pair& last = pairs_.back();
    double yDy = 0.0;
    for (size_t j = 0; j < d; ++j) yDy += last.y[j] * last.y[j] / precond[j];
    gamma = 1.0 / (last.rho * yDy);
  }
  for (size_t j = 0; j < d; ++j) q[j] *= gamma / precond[j];
  for (size_t k = 0; k < pairs_.size(); ++k) {
    const Pair& p = pairs_[k];
    const double beta = p.rho * dot(p.y, q);
    for (size_t j = 0; j < d; ++j) q[j] += (alpha[k] - beta) * p.s[j];
  }
  for (double& x : q) x = -x;
  return q;
}

LbfgsResult lbfgs_optimize(std::span<const double> w0, GlobalObjective& objective, const LbfgsConfig& config,
                           bool keep_iterates, const std::function<void(const TracePoint&)>& observer) {
  const size_t d = objective.dimension();
  if (w0.size() != d) throw DimensionError("starting point does not match the objective dimension");
  if (!(config.line_search.c1 > 0 && config.line_search.c1 < 1) ||
      !(config.line_search.backtrack > 0 && config.line_search.backtrack < 1) || config.line_search.max_trials < 1) {
    throw std::invalid_argument("invalid line search configuration");
  }
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  LbfgsResult r;
  r.w.assign(w0.begin(), w0.end());
  std::vector<double> grad(d), diag(d);
  double f = objective.value_gradient_and_curvature(r.w, grad, diag);
  // coordinates no example touches have zero curvature when lambda is zero
  for (double& x : diag) {
    if (!(x > 0)) x = 1.0;
  }
  r.precond = diag;
  double gnorm = precond_norm(grad, diag);
  r.trace.push_back({0, f, gnorm, elapsed()});
  if (observer) observer(r.trace.back());

  LbfgsHistory history(config.memory);
  int stalls = 0;
  std::vector<double> trial(d), next_grad(d);
  while (true) {
    if (gnorm <= config.tolerance) {
      r.status = LbfgsStatus::converged;
      break;
    }
    if (r.iterations >= config.max_iterations) {
      r.status = LbfgsStatus::max_iterations;
      break;
    }
    std::vector<double> dir = history.direction(grad, diag);
    double slope = dot(grad, dir);
    if (!(slope < 0)) {
      history.clear();
      dir = history.direction(grad, diag);
      slope = dot(grad, dir);
    }
    double step = 1.0;
    bool accepted = false;
    for (int t = 0; t < config.line_search.max_trials; ++t) {
      for (size_t j = 0; j < d; ++j) trial[j] = r.w[j] + step * dir[j];
      ++r.line_search_trials;
      const double ft = objective.value(trial);
      if (ft <= f + config.line_search.c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= config.line_search.backtrack;
    }
    if (!accepted) {
      if (++stalls >= 2 || history.size() == 0) {
        r.status = LbfgsStatus::stalled;
        break;
      }
      history.clear();
      continue;
    }
    const double f_next = objective.value_and_gradient(trial, next_grad);
    std::vector<double> s(d), y(d);
    for (size_t j = 0; j < d; ++j) {
      s[j] = trial[j] - r.w[j];
      y[j] = next_grad[j] - grad[j];
    }
    history.push(std::move(s), std::move(y));
    r.w.swap(trial);
    grad.swap(next_grad);
    f = f_next;
    gnorm = precond_norm(grad, diag);
    ++r.iterations;
    r.trace.push_back({r.iterations, f, gnorm, elapsed()});
    if (observer) observer(r.trace.back());
    if (keep_iterates) r.iterates.push_back(r.w);
  }
  return r;
}

void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace) {
  out << "iter,objective,grad_norm,seconds\n";
  out.precision(17);
  for (const TracePoint& p : trace) {
    out << p.iteration << ',' << p.objective << ',' << p.grad_norm << ',' << p.seconds << '\n';
  }
}

}  // namespace treelearn
