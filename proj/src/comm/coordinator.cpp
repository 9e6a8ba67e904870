#include "treelearn/comm/coordinator.hpp"

#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <stdexcept>

#include "treelearn/comm/topology.hpp"
#include "treelearn/errors.hpp"

namespace treelearn {

namespace {

constexpr uint32_t kMaxHandshake = 4096;

std::optional<uint32_t> parse_u32(std::string_view s) {
  uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

struct Pending {
  net::Socket sock;
  std::vector<uint8_t> buf;
};

struct Admitted {
  net::Socket sock;
  Assignment assignment;
};

void reply_best_effort(const net::Socket& s, const wire::Reply& r) {
  try {
    net::send_frame(s, wire::encode(r), net::Clock::now() + std::chrono::seconds(2));
  } catch (const std::exception&) {
  }
}

// Returns the complete frame payload once the buffer holds one.
std::optional<std::vector<uint8_t>> take_frame(std::vector<uint8_t>& buf) {
  if (buf.size() < wire::kLengthPrefix) return std::nullopt;
  uint32_t len = wire::ByteReader(std::span<const uint8_t>(buf.data(), 4)).u32();
  if (len > kMaxHandshake) throw ProtocolError("handshake frame too large");
  if (buf.size() < wire::kLengthPrefix + len) return std::nullopt;
  return std::vector<uint8_t>(buf.begin() + wire::kLengthPrefix,
                              buf.begin() + wire::kLengthPrefix + len);
}

}  // namespace

JobTag parse_job_tag(std::string_view job_id) {
  JobTag tag;
  auto slash = job_id.find('/');
  tag.base = std::string(job_id.substr(0, slash));
  if (slash == std::string_view::npos) return tag;
  std::string_view rest = job_id.substr(slash + 1);
  auto slash2 = rest.find('/');
  tag.shard = parse_u32(rest.substr(0, slash2));
  if (!tag.shard) throw ProtocolError("bad shard tag in job id '" + std::string(job_id) + "'");
  if (slash2 != std::string_view::npos) {
    tag.duplicate = parse_u32(rest.substr(slash2 + 1));
    if (!tag.duplicate) {
      throw ProtocolError("bad duplicate tag in job id '" + std::string(job_id) + "'");
    }
  }
  return tag;
}

Coordinator::Coordinator(CoordinatorConfig config) : config_(std::move(config)) {
  if (config_.nodes == 0) throw std::invalid_argument("coordinator needs at least one node");
  listener_ = net::listen_tcp(config_.port);
  net::set_nonblocking(listener_, true);
  port_ = net::local_port(listener_);
}

SessionRecord Coordinator::serve() {
  if (!listener_.valid()) throw std::logic_error("coordinator already served");
  const auto deadline = net::Clock::now() + config_.timeout;
  SessionRecord record;
  record.job_id = config_.job_id;
  record.nodes = config_.nodes;

  std::vector<Pending> pending;
  std::vector<Admitted> admitted;
  std::optional<bool> tagged_mode;
  std::vector<bool> shard_taken(config_.nodes, false);

  auto abort_all = [&](const std::string& reason) {
    wire::Reply r;
    r.kind = wire::Reply::Kind::aborted;
    r.reason = reason;
    for (auto& a : admitted) reply_best_effort(a.sock, r);
    for (auto& p : pending) reply_best_effort(p.sock, r);
    listener_.close();
    throw SessionAborted(reason);
  };

  auto reject = [&](Pending& p, const std::string& job, const std::string& reason) {
    wire::Reply r;
    r.kind = wire::Reply::Kind::rejected;
    r.reason = reason;
    reply_best_effort(p.sock, r);
    record.rejections.push_back({job, reason});
    p.sock.close();
  };

  auto admit = [&](Pending& p, const wire::Handshake& h) {
    JobTag tag;
    try {
      tag = parse_job_tag(h.job_id);
    } catch (const ProtocolError& e) {
      return reject(p, h.job_id, e.what());
    }
    if (tag.base != config_.job_id) return reject(p, h.job_id, "unknown job '" + tag.base + "'");
    if (h.nodes != 0 && h.nodes != config_.nodes) {
      return reject(p, h.job_id,
                    "node count mismatch: worker expects " + std::to_string(h.nodes) +
                        ", session has " + std::to_string(config_.nodes));
    }
    bool tagged = tag.shard.has_value();
    if (tagged_mode && *tagged_mode != tagged) {
      return reject(p, h.job_id, "mixing shard-tagged and untagged workers");
    }
    if (admitted.size() >= config_.nodes) return reject(p, h.job_id, "session full");
    Assignment a;
    if (tagged) {
      if (*tag.shard >= config_.nodes) {
        return reject(p, h.job_id, "shard " + std::to_string(*tag.shard) + " out of range");
      }
      if (shard_taken[*tag.shard]) {
        return reject(p, h.job_id, "shard " + std::to_string(*tag.shard) + " already admitted");
      }
      shard_taken[*tag.shard] = true;
      a.rank = *tag.shard;
    } else {
      a.rank = static_cast<uint32_t>(admitted.size());
    }
    tagged_mode = tagged;
    a.data_endpoint = {net::peer_host(p.sock), h.data_port};
    a.job_id = h.job_id;
    a.shard = tag.shard;
    a.duplicate = tag.duplicate;
    a.pass_done = h.pass_done != 0;
    admitted.push_back({std::move(p.sock), std::move(a)});
  };

  while (admitted.size() < config_.nodes) {
    if (cancelled_) abort_all("session cancelled");
    if (net::Clock::now() >= deadline) {
      abort_all("handshake timeout: " + std::to_string(admitted.size()) + " of " +
                std::to_string(config_.nodes) + " workers connected");
    }
    std::vector<pollfd> fds;
    fds.push_back({listener_.fd(), POLLIN, 0});
    for (auto& p : pending) fds.push_back({p.sock.fd(), POLLIN, 0});
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - net::Clock::now());
    int wait_ms = static_cast<int>(std::clamp<long long>(left.count(), 0, 100));
    int rc = ::poll(fds.data(), fds.size(), wait_ms);
    if (rc < 0 && errno != EINTR) throw CommError("coordinator poll failed");
    if (rc <= 0) continue;

    if (fds[0].revents & POLLIN) {
      for (;;) {
        net::Socket s = net::accept_until(listener_, net::Clock::now());
        if (!s.valid()) break;
        net::set_nonblocking(s, true);
        pending.push_back({std::move(s), {}});
      }
    }
    for (size_t i = 1; i < fds.size(); ++i) {
      if (fds[i].revents == 0) continue;
      Pending& p = pending[i - 1];
      uint8_t tmp[1024];
      ssize_t n = ::recv(p.sock.fd(), tmp, sizeof(tmp), MSG_DONTWAIT);
      if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
        p.sock.close();
        continue;
      }
      if (n < 0) continue;
      p.buf.insert(p.buf.end(), tmp, tmp + n);
      try {
        if (auto payload = take_frame(p.buf)) admit(p, wire::decode_handshake(*payload));
      } catch (const ProtocolError& e) {
        reject(p, "", e.what());
      }
    }
    std::erase_if(pending, [](const Pending& p) { return !p.sock.valid(); });
  }

  listener_.close();
  for (auto& p : pending) {
    wire::Reply r;
    r.kind = wire::Reply::Kind::rejected;
    r.reason = "session full";
    reply_best_effort(p.sock, r);
  }

  std::sort(admitted.begin(), admitted.end(),
            [](const Admitted& a, const Admitted& b) { return a.assignment.rank < b.assignment.rank; });
  for (auto& a : admitted) record.assignments.push_back(a.assignment);

  const auto reply_deadline = net::Clock::now() + std::chrono::seconds(10);
  for (auto& a : admitted) {
    auto pos = build_topology(config_.nodes, a.assignment.rank);
    wire::Reply r;
    r.rank = pos.rank;
    r.nodes = config_.nodes;
    if (pos.parent) r.parent = record.assignments[*pos.parent].data_endpoint;
    for (uint32_t c : pos.children) r.children.push_back(record.assignments[c].data_endpoint);
    net::send_frame(a.sock, wire::encode(r), reply_deadline);
  }
  return record;
}

}  // namespace treelearn
