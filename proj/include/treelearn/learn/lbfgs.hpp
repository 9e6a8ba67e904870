#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "treelearn/learn/global_objective.hpp"

namespace treelearn {

struct LineSearchConfig {
  double c1 = 1e-4;
  double backtrack = 0.5;
  int max_trials = 30;
};

struct LbfgsConfig {
  int max_iterations = 20;
  size_t memory = 10;
  double tolerance = 1e-6;  // on sqrt(g^T D^{-1} g)
  LineSearchConfig line_search;
};

// Correction pairs (s, y) with the two-loop recursion. The seed matrix is
// gamma * D^{-1} with gamma = s^T y / (y^T D^{-1} y) from the newest pair, or
// D^{-1} alone while the history is empty.
class LbfgsHistory {
 public:
  explicit LbfgsHistory(size_t memory) : memory_(memory) {}

  // Stores the pair unless y^T s <= 1e-12 |y| |s|. Returns whether it was kept.
  bool push(std::vector<double> s, std::vector<double> y);
  void clear() { pairs_.clear(); }
  size_t size() const { return pairs_.size(); }

  // -H grad.
  std::vector<double> direction(std::span<const double> grad, std::span<const double> precond) const;

 private:
  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  size_t memory_;
  std::deque<Pair> pairs_;
};

struct TracePoint {
  int iteration = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double seconds = 0.0;
};

enum class LbfgsStatus { converged, max_iterations, stalled };
std::string_view to_string(LbfgsStatus status);

struct LbfgsResult {
  std::vector<double> w;
  std::vector<double> precond;
  LbfgsStatus status = LbfgsStatus::max_iterations;
  int iterations = 0;
  int line_search_trials = 0;
  std::vector<TracePoint> trace;  // entry 0 is the starting point
  // iterate after each accepted step; filled only when asked for
  std::vector<std::vector<double>> iterates;
};

// Preconditioned L-BFGS from w0 with the Jacobi preconditioner diag(H) + lambda
// evaluated once at w0. All nodes must call with identical w0 and config.
// `observer` sees every trace point as it is recorded.
LbfgsResult lbfgs_optimize(std::span<const double> w0, GlobalObjective& objective, const LbfgsConfig& config,
                           bool keep_iterates = false,
                           const std::function<void(const TracePoint&)>& observer = {});

void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace);

}  // namespace treelearn
