#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "treelearn/comm/collective.hpp"
#include "treelearn/data/dataset.hpp"
#include "treelearn/driver/report.hpp"
#include "treelearn/learn/lbfgs.hpp"
#include "treelearn/learn/online.hpp"

namespace treelearn {

enum class StrategyKind { hybrid, online, batch, minibatch, overcomplete };

std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);

struct DriverConfig {
  StrategyKind strategy = StrategyKind::hybrid;
  Objective objective;
  OnlineConfig online;           // online.passes: HYBRID warmstart passes or ONLINE_REPEATED passes
  bool average_scaling = true;   // also average G after each online pass
  LbfgsConfig lbfgs;
  size_t minibatch = 0;          // 0: sqrt(n) rounded to a multiple of m
  double lr_L = 1.0;
  double lr_gamma = 1.0;
  int passes = 1;                // MINIBATCH and OVERCOMPLETE passes
  double slow_factor = 1.0;      // >= 1; compute phases take this many times longer
};

// Throws std::invalid_argument.
void validate(const DriverConfig& config);

// A strategy failure, tagged with the phase it happened in.
class PhaseError : public std::runtime_error {
 public:
  PhaseError(std::string phase, const std::string& what)
      : std::runtime_error(phase + ": " + what), phase_(std::move(phase)) {}
  const std::string& phase() const { return phase_; }

 private:
  std::string phase_;
};

// Returns the node's collective. Called once, after the first local pass for
// the online-first strategies and before any work for the others.
using Connector = std::function<Collective&()>;

struct RunResult {
  ModelState state;
  RunReport report;
  std::optional<LbfgsResult> lbfgs;
  CollectiveStats collective;
  size_t online_fallbacks = 0;
};

RunResult run_strategy(const Dataset& shard, const DriverConfig& config, const Connector& connect);

// eta_t = 1 / (L + gamma * sqrt(t / m)), for minibatch update t on m nodes
double minibatch_rate(double L, double gamma, double t, double m);
// eta_t = 1 / (L + gamma * sqrt(t)), for example t of an independent SGD run
double sgd_rate(double L, double gamma, double t);

}  // namespace treelearn
