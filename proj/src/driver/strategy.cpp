#include "treelearn/driver/strategy.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "treelearn/errors.hpp"
#include "treelearn/learn/averaging.hpp"
#include "treelearn/learn/global_objective.hpp"

namespace treelearn {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::hybrid: return "hybrid";
    case StrategyKind::online: return "online";
    case StrategyKind::batch: return "batch";
    case StrategyKind::minibatch: return "minibatch";
    case StrategyKind::overcomplete: return "overcomplete";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view name) {
  for (StrategyKind k : {StrategyKind::hybrid, StrategyKind::online, StrategyKind::batch, StrategyKind::minibatch,
                         StrategyKind::overcomplete}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

void validate(const DriverConfig& c) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (c.objective.dimension == 0) fail("model dimension must be positive");
  if (!(c.objective.lambda >= 0)) fail("l2 must be non-negative");
  if (!(c.online.eta > 0)) fail("eta must be positive");
  if ((c.strategy == StrategyKind::hybrid || c.strategy == StrategyKind::online) && c.online.passes < 1) {
    fail(std::string(to_string(c.strategy)) + " needs at least one online pass (use batch for none)");
  }
  if (c.lbfgs.max_iterations < 0) fail("lbfgs iterations must be non-negative");
  if (c.passes < 1) fail("passes must be at least 1");
  if (!(c.lr_L >= 0) || !(c.lr_gamma >= 0) || c.lr_L + c.lr_gamma <= 0) fail("learning-rate L and gamma must be non-negative and not both zero");
  if (!(c.slow_factor >= 1)) fail("slow factor must be at least 1");
}

double minibatch_rate(double L, double gamma, double t, double m) { return 1.0 / (L + gamma * std::sqrt(t / m)); }

double sgd_rate(double L, double gamma, double t) { return 1.0 / (L + gamma * std::sqrt(t)); }

namespace {

using Clock = std::chrono::steady_clock;

// Stretches each stretch of local compute by the slow factor.
class Throttle {
 public:
  explicit Throttle(double factor) : factor_(factor), mark_(Clock::now()) {}
  void mark() { mark_ = Clock::now(); }
  void pause() {
    if (factor_ <= 1.0) return;
    auto busy = Clock::now() - mark_;
    std::this_thread::sleep_for(std::chrono::duration_cast<Clock::duration>(busy * (factor_ - 1.0)));
  }

 private:
  double factor_;
  Clock::time_point mark_;
};

class Recorder {
 public:
  Recorder() : start_(Clock::now()) {}

  void attach(Collective* c) { collective_ = c; }

  ReportRow& add(std::string phase, int step, int passes, std::optional<double> objective = std::nullopt,
                 std::optional<double> grad_norm = std::nullopt) {
    ReportRow r;
    r.phase = std::move(phase);
    r.step = step;
    r.passes = passes;
    r.objective = objective;
    r.grad_norm = grad_norm;
    r.seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    if (collective_) {
      const auto& s = collective_->stats();
      r.rank = collective_->rank();
      r.comm_seconds = s.seconds;
      r.vector_calls = s.vector_calls;
      r.scalar_calls = s.scalar_calls;
      r.bytes_sent = s.bytes_sent;
      r.bytes_received = s.bytes_received;
    }
    report.rows.push_back(std::move(r));
    return report.rows.back();
  }

  RunReport report;

 private:
  Clock::time_point start_;
  Collective* collective_ = nullptr;
};

template <class F>
decltype(auto) in_phase(const char* name, F&& f) {
  try {
    return f();
  } catch (const PhaseError&) {
    throw;
  } catch (const WorkerRejected&) {
    throw;
  } catch (const std::exception& e) {
    throw PhaseError(name, e.what());
  }
}

class Run {
 public:
  Run(const Dataset& shard, const DriverConfig& config, const Connector& connect)
      : shard_(shard), config_(config), connect_(connect), throttle_(config.slow_factor) {
    result_.state = ModelState::initial(config.objective.dimension);
  }

  RunResult execute() {
    in_phase("setup", [&] { validate(config_); check_dimension(shard_, config_.objective.dimension); });
    switch (config_.strategy) {
      case StrategyKind::hybrid:
      case StrategyKind::online: online_then_batch(); break;
      case StrategyKind::batch:
        join();
        lbfgs(0);
        break;
      case StrategyKind::minibatch: minibatch(); break;
      case StrategyKind::overcomplete: overcomplete(); break;
    }
    if (collective_) {
      collective_->set_hooks({}, {});
      result_.collective = collective_->stats();
    }
    result_.report = std::move(recorder_.report);
    return std::move(result_);
  }

 private:
  void join() {
    collective_ = in_phase("connect", [&] { return &connect_(); });
    recorder_.attach(collective_);
    objective_.emplace(shard_, config_.objective, *collective_);
    if (config_.slow_factor > 1.0) {
      collective_->set_hooks([this] { throttle_.pause(); }, [this] { throttle_.mark(); });
    }
    throttle_.mark();
  }

  void online_then_batch() {
    const bool online_only = config_.strategy == StrategyKind::online;
    int passes = 0;
    for (int p = 1; p <= config_.online.passes; ++p) {
      in_phase("online", [&] {
        PassStats s = sgd_pass(shard_, result_.state, config_.online, config_.objective.loss);
        result_.online_fallbacks += s.fallbacks;
      });
      ++passes;
      if (!collective_) {
        throttle_.pause();
        join();
      }
      in_phase("average", [&] {
        if (config_.average_scaling) {
          average_state(result_.state, *collective_);
        } else {
          result_.state.w = weighted_average_w(result_.state.w, result_.state.scaling, *collective_);
        }
      });
      std::optional<double> f;
      if (online_only) f = in_phase("objective", [&] { return objective_->value(result_.state.w); });
      recorder_.add("online", p, passes, f);
    }
    if (!online_only) lbfgs(passes);
  }

  void lbfgs(int passes_before) {
    result_.lbfgs = in_phase("lbfgs", [&] {
      return lbfgs_optimize(result_.state.w, *objective_, config_.lbfgs, false, [&](const TracePoint& t) {
        recorder_.add("lbfgs", t.iteration, passes_before + t.iteration, t.objective, t.grad_norm);
      });
    });
    result_.state.w = result_.lbfgs->w;
  }

  void minibatch() {
    join();
    const uint32_t m = collective_->size();
    const double n = in_phase("minibatch", [&] { return objective_->example_count(); });
    size_t b = config_.minibatch;
    if (b == 0) b = static_cast<size_t>(std::llround(std::sqrt(n) / m)) * m;
    b = std::max<size_t>(b, m);
    b = (b + m - 1) / m * m;
    const size_t per_node = b / m;
    const size_t updates = static_cast<size_t>(std::ceil(n / static_cast<double>(b)));
    const size_t d = config_.objective.dimension;
    const double decay = config_.objective.lambda / n;
    std::vector<double> packed(d + 1);
    double t = 0;
    auto& w = result_.state.w;
    for (int pass = 1; pass <= config_.passes; ++pass) {
      in_phase("minibatch", [&] {
        for (size_t u = 0; u < updates; ++u) {
          std::fill(packed.begin(), packed.end(), 0.0);
          const size_t lo = std::min(u * per_node, shard_.size()), hi = std::min(lo + per_node, shard_.size());
          for (size_t i = lo; i < hi; ++i) {
            const ExampleView x = shard_[i];
            const double slope = loss_slope(config_.objective.loss, margin_unchecked(w, x), x.label) * x.importance;
            for (size_t k = 0; k < x.indices.size(); ++k) packed[x.indices[k]] += slope * x.values[k];
          }
          packed[d] = static_cast<double>(hi - lo);
          collective_->allreduce(packed, ReduceOp::sum);
          const double count = packed[d];
          if (count == 0) continue;
          const double eta = minibatch_rate(config_.lr_L, config_.lr_gamma, t += 1, m);
          for (size_t j = 0; j < d; ++j) w[j] -= eta * (packed[j] / count + decay * w[j]);
        }
      });
      const double f = in_phase("objective", [&] { return objective_->value(w); });
      recorder_.add("minibatch", pass, pass, f);
    }
  }

  void overcomplete() {
    auto& w = result_.state.w;
    double t = 0;
    for (int pass = 1; pass <= config_.passes; ++pass) {
      in_phase("overcomplete", [&] {
        for (size_t i = 0; i < shard_.size(); ++i) {
          const ExampleView x = shard_[i];
          const double slope = loss_slope(config_.objective.loss, margin_unchecked(w, x), x.label) * x.importance;
          const double eta = sgd_rate(config_.lr_L, config_.lr_gamma, t += 1);
          for (size_t k = 0; k < x.indices.size(); ++k) w[x.indices[k]] -= eta * slope * x.values[k];
        }
      });
      if (pass == 1) {
        throttle_.pause();
        join();
      }
    }
    w = in_phase("average", [&] { return uniform_average(w, *collective_); });
    const double f = in_phase("objective", [&] { return objective_->value(w); });
    recorder_.add("overcomplete", config_.passes, config_.passes, f);
  }

  const Dataset& shard_;
  const DriverConfig& config_;
  const Connector& connect_;
  Throttle throttle_;
  Recorder recorder_;
  Collective* collective_ = nullptr;
  std::optional<DistributedObjective> objective_;
  RunResult result_;
};

}  // namespace

RunResult run_strategy(const Dataset& shard, const DriverConfig& config, const Connector& connect) {
  return Run(shard, config, connect).execute();
}

}  // namespace treelearn
