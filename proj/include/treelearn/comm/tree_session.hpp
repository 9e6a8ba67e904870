#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "treelearn/comm/collective.hpp"
#include "treelearn/comm/socket.hpp"
#include "treelearn/comm/topology.hpp"

namespace treelearn {

inline constexpr size_t kDefaultChunkBytes = 65536;

struct JoinOptions {
  std::string coordinator_host = "127.0.0.1";
  uint16_t coordinator_port = 0;
  std::string job_id;
  uint32_t nodes = 0;  // 0: whatever the coordinator says
  bool pass_done = false;
  size_t chunk_bytes = kDefaultChunkBytes;
  std::chrono::milliseconds handshake_timeout{120000};
  std::chrono::milliseconds io_timeout{300000};
};

// One node's endpoint of the spanning-tree AllReduce. Reduce and broadcast
// run over TCP links to the parent and children, pipelined in chunks of
// `chunk_bytes`: a chunk is forwarded up as soon as both child chunks are in,
// and relayed down as soon as it arrives from the parent.
//
// Not thread-safe. Any socket or protocol failure closes every link, so the
// neighbours fail too and the whole group aborts.
class TreeSession final : public Collective {
 public:
  // Handshakes with the coordinator, then connects to the parent and accepts
  // the children.
  static std::unique_ptr<TreeSession> join(const JoinOptions& options);

  uint32_t rank() const override { return topology_.position.rank; }
  uint32_t size() const override { return topology_.position.nodes; }
  const TreeTopology& topology() const { return topology_; }
  size_t chunk_bytes() const { return chunk_bytes_; }

 protected:
  void do_allreduce(std::span<double> data, ReduceOp op) override;

 private:
  TreeSession() = default;
  void run_collective(std::span<double> data, ReduceOp op);
  void close_all();

  TreeTopology topology_;
  net::Socket parent_;
  std::array<net::Socket, 2> children_;
  size_t num_children_ = 0;
  size_t chunk_bytes_ = kDefaultChunkBytes;
  std::chrono::milliseconds io_timeout_{300000};
  uint64_t sequence_ = 0;
  bool broken_ = false;
};

}  // namespace treelearn
