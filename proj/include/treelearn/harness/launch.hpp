#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "treelearn/driver/report.hpp"

namespace treelearn {

struct HarnessPlan {
  uint32_t nodes = 1;
  uint32_t duplicates = 1;
  std::map<uint32_t, double> slow;  // rank -> delay factor, applied to duplicate 0
  std::filesystem::path dataset;
  uint32_t replication = 1;
  std::vector<std::string> worker_flags;  // passed through to every worker
  std::filesystem::path out_dir = "launch-out";
  std::filesystem::path worker_binary;    // empty: "worker" next to this executable
  uint16_t port = 0;                      // 0: any free port
  std::chrono::milliseconds timeout{120000};
};

// Throws std::invalid_argument for an inconsistent plan (unknown rank,
// factor below 1, flags the harness owns).
void validate(const HarnessPlan& plan);

struct WorkerRecord {
  uint32_t shard = 0;
  uint32_t duplicate = 0;
  int pid = 0;
  bool admitted = false;
  std::optional<int> exit_code;  // absent when the harness killed it
  std::filesystem::path report, log;
};

struct LaunchResult {
  bool ok = false;
  std::string failure;
  double wall_seconds = 0.0;
  std::vector<WorkerRecord> workers;
  RunReport merged;
};

// Shards the dataset, runs coordinator and workers, merges the reports.
// Writes survivors.txt, report.csv and launch.log under out_dir.
LaunchResult launch(const HarnessPlan& plan);

// "0:10,3:2.5" -> {0: 10, 3: 2.5}. Throws std::invalid_argument.
std::map<uint32_t, double> parse_slow_map(const std::string& text);

// Per-row stall: a rank's collective time in a row minus the smallest
// collective time any rank spent in the same row.
std::vector<std::vector<double>> stall_seconds(const std::vector<RunReport>& per_rank);

int launch_main(int argc, const char* const* argv);

}  // namespace treelearn
