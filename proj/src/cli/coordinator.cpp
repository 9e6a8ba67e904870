#include <CLI11.hpp>

#include <iostream>

#include "treelearn/cli.hpp"
#include "treelearn/comm/coordinator.hpp"
#include "treelearn/errors.hpp"

namespace treelearn {

int coordinator_main(int argc, const char* const* argv) {
  CoordinatorConfig config;
  double timeout = 60;
  CLI::App app{"Form the spanning tree for one AllReduce job"};
  app.add_option("--port", config.port, "Listening port, 0 for any")->capture_default_str();
  app.add_option("--nodes", config.nodes, "Group size")->required()->check(CLI::PositiveNumber);
  app.add_option("--job-id", config.job_id, "Job id workers must present")->required();
  app.add_option("--timeout", timeout, "Seconds to wait for all nodes")->capture_default_str();
  try {
    app.parse(argc, argv);
    if (!(timeout > 0)) throw CLI::ValidationError("--timeout", "must be positive");
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "coordinator: " << e.what() << "\nrun with --help for usage\n";
    return kExitUsage;
  }
  config.timeout = std::chrono::milliseconds(static_cast<int64_t>(timeout * 1000));
  try {
    Coordinator coordinator(config);
    std::cout << "port " << coordinator.port() << std::endl;
    SessionRecord record = coordinator.serve();
    for (const Assignment& a : record.assignments) {
      std::cout << "rank " << a.rank << " " << a.job_id << " " << a.data_endpoint.host << ":" << a.data_endpoint.port
                << "\n";
    }
    for (const Rejection& r : record.rejections) std::cout << "rejected " << r.job_id << " " << r.reason << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "coordinator: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace treelearn
