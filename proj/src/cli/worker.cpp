#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>

#include "treelearn/cli.hpp"
#include "treelearn/comm/tree_session.hpp"
#include "treelearn/errors.hpp"
#include "treelearn/metrics/evaluate.hpp"
#include "treelearn/model/model_io.hpp"

namespace treelearn {

std::pair<std::string, uint16_t> parse_host_port(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw std::invalid_argument("expected HOST:PORT, got '" + text + "'");
  }
  const std::string port = text.substr(colon + 1);
  size_t used = 0;
  unsigned long value = 0;
  try {
    value = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || value == 0 || value > 65535) throw std::invalid_argument("bad port in '" + text + "'");
  return {text.substr(0, colon), static_cast<uint16_t>(value)};
}

std::variant<WorkerOptions, int> parse_worker_args(int argc, const char* const* argv, std::ostream& err) {
  WorkerOptions o;
  DriverConfig& c = o.config;
  std::string coordinator, strategy = "hybrid", loss = "logistic", invariance = "importance";
  bool no_average_g = false;

  CLI::App app{"Train one shard as a node of an AllReduce group"};
  app.add_option("--coordinator", coordinator, "Coordinator HOST:PORT")->required();
  app.add_option("--job-id", o.job_id, "Job id, optionally tagged JOB/SHARD[/DUP]")->required();
  app.add_option("--data", o.data, "This node's training shard")->required();
  app.add_option("--bits", o.bits, "Feature hash bits")->check(CLI::Range(1, 31))->capture_default_str();
  app.add_option("--loss", loss, "logistic or squared")->capture_default_str();
  app.add_option("--l2", c.objective.lambda, "L2 coefficient on the unscaled objective")->capture_default_str();
  app.add_option("--strategy", strategy, "hybrid, online, batch, minibatch or overcomplete")->capture_default_str();
  app.add_option("--online-passes", c.online.passes, "Online passes (hybrid warmstart or online strategy)")
      ->capture_default_str();
  app.add_option("--lbfgs-iters", c.lbfgs.max_iterations, "L-BFGS iteration limit")->capture_default_str();
  app.add_option("--lbfgs-memory", c.lbfgs.memory, "L-BFGS correction pairs")->capture_default_str();
  app.add_option("--lbfgs-tol", c.lbfgs.tolerance, "Stop at this preconditioned gradient norm")->capture_default_str();
  app.add_option("--eta", c.online.eta, "Online learning rate")->capture_default_str();
  app.add_option("--invariance", invariance, "importance or plain")->capture_default_str();
  app.add_flag("--no-average-g", no_average_g, "Keep local G after online passes");
  app.add_option("--minibatch", c.minibatch, "Global minibatch size, 0 for sqrt(n)")->capture_default_str();
  app.add_option("--lr-L", c.lr_L, "L in 1/(L + gamma sqrt(t))")->capture_default_str();
  app.add_option("--lr-gamma", c.lr_gamma, "gamma in 1/(L + gamma sqrt(t))")->capture_default_str();
  app.add_option("--passes", c.passes, "Passes for minibatch and overcomplete")->capture_default_str();
  app.add_option("--model", o.model, "Write the model here (rank 0)");
  app.add_option("--report", o.report, "Write this node's run report CSV here");
  app.add_option("--test", o.test, "Held-out set evaluated on rank 0");
  app.add_option("--trace", o.trace, "Write the L-BFGS trace CSV here (rank 0)");
  app.add_option("--predictions", o.predictions, "Write test margins here (rank 0)");
  app.add_option("--nodes", o.nodes, "Expected group size, 0 to accept the coordinator's");
  app.add_option("--slow-factor", c.slow_factor, "Stretch local compute by this factor")->capture_default_str();
  app.add_option("--chunk-bytes", o.chunk_bytes, "AllReduce pipeline chunk size")->capture_default_str();
  app.add_option("--timeout", o.timeout_seconds, "Seconds to wait for the group to form")->capture_default_str();

  try {
    app.parse(argc, argv);
    std::tie(o.coordinator_host, o.coordinator_port) = parse_host_port(coordinator);
    c.strategy = parse_strategy(strategy);
    c.objective.loss = parse_loss(loss);
    c.online.invariance = parse_invariance(invariance);
    c.average_scaling = !no_average_g;
    c.objective.dimension = size_t{1} << o.bits;
    validate(c);
  } catch (const CLI::CallForHelp&) {
    err << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "worker: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "worker: " << e.what() << "\n";
    return kExitUsage;
  }
  return o;
}

namespace {

template <class F>
void write_file(const std::string& path, F&& body) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  body(out);
  if (!out) throw IoError("write failure on '" + path + "'");
}

}  // namespace

int worker_main(int argc, const char* const* argv) {
  auto parsed = parse_worker_args(argc, argv, std::cerr);
  if (auto* code = std::get_if<int>(&parsed)) return *code;
  const WorkerOptions& o = std::get<WorkerOptions>(parsed);
  const auto t0 = std::chrono::steady_clock::now();
  std::string phase = "load";
  try {
    Dataset shard = load_dataset(o.data, o.bits);

    std::unique_ptr<TreeSession> session;
    const bool online_first = o.config.strategy == StrategyKind::hybrid ||
                              o.config.strategy == StrategyKind::online ||
                              o.config.strategy == StrategyKind::overcomplete;
    Connector connect = [&]() -> Collective& {
      JoinOptions j;
      j.coordinator_host = o.coordinator_host;
      j.coordinator_port = o.coordinator_port;
      j.job_id = o.job_id;
      j.nodes = o.nodes;
      j.pass_done = online_first;
      j.chunk_bytes = o.chunk_bytes;
      j.handshake_timeout = std::chrono::milliseconds(static_cast<int64_t>(o.timeout_seconds * 1000));
      session = TreeSession::join(j);
      return *session;
    };
    phase = "train";
    RunResult result = run_strategy(shard, o.config, connect);
    const uint32_t rank = session ? session->rank() : 0;

    ReportRow final_row;
    final_row.rank = rank;
    final_row.phase = "final";
    if (!result.report.rows.empty()) {
      final_row.passes = result.report.rows.back().passes;
      final_row.objective = result.report.rows.back().objective;
    }
    final_row.comm_seconds = result.collective.seconds;
    final_row.vector_calls = result.collective.vector_calls;
    final_row.scalar_calls = result.collective.scalar_calls;
    final_row.bytes_sent = result.collective.bytes_sent;
    final_row.bytes_received = result.collective.bytes_received;

    if (rank == 0) {
      phase = "output";
      if (!o.test.empty()) {
        Dataset test = load_dataset(o.test, o.bits);
        Evaluation e = evaluate(result.state.w, test, o.config.objective.loss);
        final_row.test_auroc = e.auroc;
        final_row.test_auprc = e.auprc;
        final_row.test_nll = e.nll;
        if (!o.predictions.empty()) write_file(o.predictions, [&](std::ostream& out) { write_predictions(out, e.margins); });
      }
      if (!o.model.empty()) {
        save_model(o.model, {o.bits, o.config.objective.loss, o.config.objective.lambda, result.state.w});
      }
      if (!o.trace.empty() && result.lbfgs) {
        write_file(o.trace, [&](std::ostream& out) { write_trace_csv(out, result.lbfgs->trace); });
      }
    }
    final_row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.report.rows.push_back(final_row);
    if (!o.report.empty()) write_file(o.report, [&](std::ostream& out) { write_report_csv(out, result.report); });

    std::cout << "rank " << rank << " " << to_string(o.config.strategy) << " done";
    if (final_row.objective) std::cout << " objective " << *final_row.objective;
    if (final_row.test_auprc) std::cout << " test_auprc " << *final_row.test_auprc;
    std::cout << " seconds " << final_row.seconds << "\n";
    return kExitOk;
  } catch (const WorkerRejected& e) {
    std::cerr << "worker " << o.job_id << ": " << e.what() << "\n";
    return kExitRejected;
  } catch (const std::exception& e) {
    std::cerr << "worker " << o.job_id << ": " << phase << ": " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace treelearn
