#include <CLI11.hpp>

#include <iostream>

#include "treelearn/cli.hpp"
#include "treelearn/harness/launch.hpp"

namespace treelearn {

int launch_main(int argc, const char* const* argv) {
  HarnessPlan plan;
  std::string slow, dataset, out_dir = plan.out_dir.string(), worker;
  double timeout = 120;
  CLI::App app{"Run an AllReduce training job as local processes"};
  app.add_option("--nodes", plan.nodes, "Group size")->required()->check(CLI::PositiveNumber);
  app.add_option("--duplicates", plan.duplicates, "Speculative copies per shard")->capture_default_str();
  app.add_option("--slow", slow, "RANK:FACTOR[,...] slow down the first copy of these shards");
  app.add_option("--dataset", dataset, "Training examples to shard")->required();
  app.add_option("--replication", plan.replication, "Shards holding each example")->capture_default_str();
  app.add_option("--out", out_dir, "Directory for shards, logs and reports")->capture_default_str();
  app.add_option("--port", plan.port, "Coordinator port, 0 for any")->capture_default_str();
  app.add_option("--timeout", timeout, "Seconds to wait for the group to form")->capture_default_str();
  app.add_option("--worker", worker, "Worker executable (default: next to launch)");
  app.add_option("worker-flags", plan.worker_flags, "Flags after -- go to every worker");
  try {
    app.parse(argc, argv);
    if (!slow.empty()) plan.slow = parse_slow_map(slow);
    plan.dataset = dataset;
    plan.out_dir = out_dir;
    plan.worker_binary = worker;
    plan.timeout = std::chrono::milliseconds(static_cast<int64_t>(timeout * 1000));
    validate(plan);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "launch: " << e.what() << "\nrun with --help for usage\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "launch: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    LaunchResult r = launch(plan);
    if (!r.ok) {
      std::cerr << "launch: " << r.failure << " (see " << (plan.out_dir / "launch.log").string() << ")\n";
      return kExitRuntime;
    }
    std::cout << "launch: " << plan.nodes << " nodes done in " << r.wall_seconds << " s; reports in "
              << plan.out_dir.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "launch: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace treelearn
