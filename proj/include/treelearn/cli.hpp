#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>

#include "treelearn/driver/strategy.hpp"

namespace treelearn {

// Exit codes shared by the executables.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRejected = 3;  // a speculative duplicate that lost its shard

struct WorkerOptions {
  std::string coordinator_host;
  uint16_t coordinator_port = 0;
  std::string job_id;
  uint32_t nodes = 0;
  std::string data;
  int bits = 18;
  DriverConfig config;
  std::string model, report, test, trace, predictions;
  size_t chunk_bytes = 65536;
  double timeout_seconds = 120;
};

// "host:port" -> pair. Throws std::invalid_argument.
std::pair<std::string, uint16_t> parse_host_port(const std::string& text);

// Returns the options, or the exit code when parsing ends the program
// (help text or usage error, reported on `err`).
std::variant<WorkerOptions, int> parse_worker_args(int argc, const char* const* argv, std::ostream& err);

int worker_main(int argc, const char* const* argv);
int coordinator_main(int argc, const char* const* argv);
int eval_main(int argc, const char* const* argv);
int commcost_main(int argc, const char* const* argv);
int synth_main(int argc, const char* const* argv);

}  // namespace treelearn
