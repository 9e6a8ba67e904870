#include "treelearn/harness/launch.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>
#include <fcntl.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <future>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "treelearn/comm/coordinator.hpp"
#include "treelearn/data/shard.hpp"
#include "treelearn/errors.hpp"

extern char** environ;

namespace treelearn {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kOwnedFlags = {"--coordinator", "--job-id", "--data", "--nodes", "--slow-factor"};

std::string flag_name(const std::string& arg) { return arg.substr(0, arg.find('=')); }

fs::path default_worker_binary() {
  std::error_code ec;
  fs::path self = fs::read_symlink("/proc/self/exe", ec);
  if (ec) throw IoError("cannot locate the worker executable; pass --worker");
  return self.parent_path() / "worker";
}

// Drops --report (the harness assigns per-worker reports).
std::vector<std::string> strip_report(const std::vector<std::string>& flags) {
  std::vector<std::string> out;
  for (size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] == "--report") {
      ++i;
      continue;
    }
    if (flags[i].rfind("--report=", 0) == 0) continue;
    out.push_back(flags[i]);
  }
  return out;
}

int spawn(const fs::path& binary, const std::vector<std::string>& args, const fs::path& log) {
  std::vector<char*> argv;
  std::string bin = binary.string();
  argv.push_back(bin.data());
  std::vector<std::string> copy = args;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  pid_t pid = 0;
  int rc = posix_spawn(&pid, bin.c_str(), &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw IoError("cannot start " + bin + ": " + std::strerror(rc));
  return pid;
}

std::optional<int> decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + WTERMSIG(status);
}

}  // namespace

void validate(const HarnessPlan& plan) {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  if (plan.nodes < 1) fail("nodes must be at least 1");
  if (plan.duplicates < 1) fail("duplicates must be at least 1");
  if (plan.replication < 1 || plan.replication > plan.nodes) fail("replication must be in [1, nodes]");
  for (auto [rank, factor] : plan.slow) {
    if (rank >= plan.nodes) fail("slow rank " + std::to_string(rank) + " is not in the group");
    if (!(factor >= 1)) fail("slow factor must be at least 1");
  }
  for (const auto& f : plan.worker_flags) {
    if (kOwnedFlags.count(flag_name(f))) fail("worker flag " + flag_name(f) + " is set by the harness");
  }
}

std::map<uint32_t, double> parse_slow_map(const std::string& text) {
  std::map<uint32_t, double> out;
  std::stringstream s(text);
  for (std::string item; std::getline(s, item, ',');) {
    auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("expected RANK:FACTOR, got '" + item + "'");
    try {
      size_t used = 0;
      unsigned long rank = std::stoul(item.substr(0, colon), &used);
      if (used != colon) throw std::invalid_argument(item);
      std::string f = item.substr(colon + 1);
      double factor = std::stod(f, &used);
      if (used != f.size()) throw std::invalid_argument(item);
      out[static_cast<uint32_t>(rank)] = factor;
    } catch (const std::exception&) {
      throw std::invalid_argument("expected RANK:FACTOR, got '" + item + "'");
    }
  }
  return out;
}

std::vector<std::vector<double>> stall_seconds(const std::vector<RunReport>& per_rank) {
  std::vector<std::vector<double>> out(per_rank.size());
  if (per_rank.empty()) return out;
  size_t rows = per_rank[0].rows.size();
  for (const auto& r : per_rank) rows = std::min(rows, r.rows.size());
  for (size_t i = 0; i < rows; ++i) {
    std::vector<double> spent;
    for (const auto& r : per_rank) {
      double prev = i > 0 ? r.rows[i - 1].comm_seconds : 0.0;
      // the final row repeats the run totals
      if (r.rows[i].phase == "final") prev = r.rows[i].comm_seconds;
      spent.push_back(r.rows[i].comm_seconds - prev);
    }
    const double floor = *std::min_element(spent.begin(), spent.end());
    for (size_t k = 0; k < per_rank.size(); ++k) out[k].push_back(spent[k] - floor);
  }
  return out;
}

LaunchResult launch(const HarnessPlan& plan) {
  validate(plan);
  const auto t0 = std::chrono::steady_clock::now();
  LaunchResult result;
  fs::create_directories(plan.out_dir);
  std::ofstream log(plan.out_dir / "launch.log");
  const fs::path binary = plan.worker_binary.empty() ? default_worker_binary() : plan.worker_binary;
  if (!fs::exists(binary)) throw IoError("worker executable '" + binary.string() + "' not found");

  const fs::path shard_dir = plan.out_dir / "shards";
  ShardManifest manifest = shard_dataset(plan.dataset, plan.nodes, shard_dir, plan.replication);
  log << "sharded " << plan.dataset << " into " << manifest.shards << " shards\n";

  std::unique_ptr<Coordinator> coordinator;
  for (int attempt = 0;; ++attempt) {
    try {
      uint16_t port = plan.port == 0 ? 0 : static_cast<uint16_t>(plan.port + attempt);
      coordinator = std::make_unique<Coordinator>(CoordinatorConfig{port, plan.nodes, "job", plan.timeout});
      break;
    } catch (const CommError& e) {
      log << "coordinator bind failed: " << e.what() << "\n";
      if (attempt == 2) throw;
    }
  }
  log << "coordinator on port " << coordinator->port() << "\n";

  const std::vector<std::string> passthrough = strip_report(plan.worker_flags);
  for (uint32_t k = 0; k < plan.nodes; ++k) {
    for (uint32_t j = 0; j < plan.duplicates; ++j) {
      WorkerRecord w;
      w.shard = k;
      w.duplicate = j;
      const std::string tag = std::to_string(k) + "-" + std::to_string(j);
      w.report = plan.out_dir / ("report-" + tag + ".csv");
      w.log = plan.out_dir / ("worker-" + tag + ".log");
      std::vector<std::string> args = {"--coordinator", "127.0.0.1:" + std::to_string(coordinator->port()),
                                       "--job-id", "job/" + std::to_string(k) + "/" + std::to_string(j),
                                       "--data", manifest.paths[k],
                                       "--nodes", std::to_string(plan.nodes),
                                       "--report", w.report.string()};
      auto slow = plan.slow.find(k);
      if (slow != plan.slow.end() && j == 0) {
        std::ostringstream f;
        f.precision(17);
        f << slow->second;
        args.insert(args.end(), {"--slow-factor", f.str()});
      }
      args.insert(args.end(), passthrough.begin(), passthrough.end());
      w.pid = spawn(binary, args, w.log);
      log << "started shard " << k << " duplicate " << j << " pid " << w.pid << "\n";
      result.workers.push_back(std::move(w));
    }
  }

  auto kill_worker = [&](WorkerRecord& w) {
    if (w.exit_code || w.pid <= 0) return;
    ::kill(w.pid, SIGKILL);
    int status = 0;
    ::waitpid(w.pid, &status, 0);
    log << "killed shard " << w.shard << " duplicate " << w.duplicate << "\n";
    w.pid = -w.pid;
  };
  auto reap = [&](WorkerRecord& w, bool block) {
    if (w.exit_code || w.pid <= 0) return;
    int status = 0;
    pid_t r = ::waitpid(w.pid, &status, block ? 0 : WNOHANG);
    if (r == w.pid) {
      w.exit_code = decode_status(status);
      log << "shard " << w.shard << " duplicate " << w.duplicate << " exited " << *w.exit_code << "\n";
    }
  };

  auto served = std::async(std::launch::async, [&] { return coordinator->serve(); });
  std::optional<uint32_t> dead_shard;
  while (served.wait_for(std::chrono::milliseconds(20)) != std::future_status::ready) {
    for (auto& w : result.workers) reap(w, false);
    for (uint32_t k = 0; k < plan.nodes && !dead_shard; ++k) {
      bool all_failed = std::all_of(result.workers.begin(), result.workers.end(), [&](const WorkerRecord& w) {
        return w.shard != k || (w.exit_code && *w.exit_code != 0);
      });
      if (all_failed) {
        dead_shard = k;
        coordinator->cancel();
      }
    }
  }

  SessionRecord record;
  try {
    record = served.get();
  } catch (const std::exception& e) {
    for (auto& w : result.workers) kill_worker(w);
    result.failure = dead_shard ? "every duplicate of shard " + std::to_string(*dead_shard) + " failed"
                                : std::string("group did not form: ") + e.what();
    log << result.failure << "\n";
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
  }

  std::ofstream survivors(plan.out_dir / "survivors.txt");
  survivors << "shard,duplicate,rank,job_id\n";
  for (const Assignment& a : record.assignments) {
    for (auto& w : result.workers) {
      if (a.shard && *a.shard == w.shard && a.duplicate && *a.duplicate == w.duplicate) w.admitted = true;
    }
    survivors << a.shard.value_or(a.rank) << ',' << a.duplicate.value_or(0) << ',' << a.rank << ',' << a.job_id
              << '\n';
  }
  for (const Rejection& r : record.rejections) log << "coordinator rejected " << r.job_id << ": " << r.reason << "\n";
  for (auto& w : result.workers) {
    if (!w.admitted) kill_worker(w);
  }

  std::vector<RunReport> reports(plan.nodes);
  for (auto& w : result.workers) {
    if (!w.admitted) continue;
    reap(w, true);
    if (*w.exit_code != 0 && result.failure.empty()) {
      result.failure = "shard " + std::to_string(w.shard) + " worker exited " + std::to_string(*w.exit_code);
    }
  }
  if (result.failure.empty()) {
    try {
      for (auto& w : result.workers) {
        if (!w.admitted) continue;
        std::ifstream in(w.report);
        if (!in) throw IoError("missing report " + w.report.string());
        reports[w.shard] = read_report_csv(in);
      }
    } catch (const std::exception& e) {
      result.failure = e.what();
    }
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!result.failure.empty()) {
    log << "failed: " << result.failure << "\n";
    return result;
  }

  auto stall = stall_seconds(reports);
  std::ofstream merged(plan.out_dir / "report.csv");
  merged << kReportHeader << ",stall_seconds,shard,duplicate\n";
  merged.precision(17);
  for (uint32_t k = 0; k < plan.nodes; ++k) {
    const WorkerRecord* w = nullptr;
    for (auto& x : result.workers)
      if (x.admitted && x.shard == k) w = &x;
    std::ostringstream rows;
    write_report_csv(rows, reports[k]);
    std::istringstream lines(rows.str());
    std::string line;
    std::getline(lines, line);
    for (size_t i = 0; std::getline(lines, line); ++i) {
      merged << line << ',';
      if (i < stall[k].size()) merged << stall[k][i];
      merged << ',' << k << ',' << w->duplicate << '\n';
    }
    for (auto& row : reports[k].rows) result.merged.rows.push_back(row);
  }
  result.ok = true;
  log << "done in " << result.wall_seconds << " s\n";
  return result;
}

}  // namespace treelearn
