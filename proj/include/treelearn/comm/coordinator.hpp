#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treelearn/comm/socket.hpp"
#include "treelearn/comm/wire.hpp"

namespace treelearn {

// A worker's job id is "<job>" or "<job>/<shard>[/<duplicate>]". With a shard
// tag the coordinator assigns rank = shard and admits only the first worker
// to report for each shard (speculative duplicates); without one, ranks
// follow arrival order.
struct JobTag {
  std::string base;
  std::optional<uint32_t> shard;
  std::optional<uint32_t> duplicate;
};

JobTag parse_job_tag(std::string_view job_id);

struct CoordinatorConfig {
  uint16_t port = 0;
  uint32_t nodes = 1;
  std::string job_id;
  std::chrono::milliseconds timeout{60000};
};

struct Assignment {
  uint32_t rank = 0;
  wire::Endpoint data_endpoint;
  std::string job_id;
  std::optional<uint32_t> shard;
  std::optional<uint32_t> duplicate;
  bool pass_done = false;
};

struct Rejection {
  std::string job_id;
  std::string reason;
};

struct SessionRecord {
  std::string job_id;
  uint32_t nodes = 0;
  std::vector<Assignment> assignments;  // indexed by rank
  std::vector<Rejection> rejections;
};

class Coordinator {
 public:
  // Binds the listening socket immediately so workers may connect before
  // serve() runs.
  explicit Coordinator(CoordinatorConfig config);

  uint16_t port() const { return port_; }

  // Admits exactly `nodes` workers, replies with their tree positions and
  // returns. On timeout or cancel() every connected worker receives an abort
  // reply and SessionAborted is thrown.
  SessionRecord serve();

  // Safe to call from another thread.
  void cancel() { cancelled_ = true; }

 private:
  CoordinatorConfig config_;
  net::Socket listener_;
  uint16_t port_ = 0;
  std::atomic<bool> cancelled_{false};
};

}  // namespace treelearn
