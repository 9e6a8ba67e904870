#include "treelearn/comm/tree_session.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/uio.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <vector>

#include "treelearn/comm/wire.hpp"
#include "treelearn/errors.hpp"

namespace treelearn {

namespace {

// Byte layout of one collective's data: `frames` frames of `chunk` bytes,
// the last one possibly shorter.
struct Layout {
  size_t total = 0;
  size_t chunk = 0;
  size_t frames = 0;

  Layout(size_t total_bytes, size_t chunk_bytes)
      : total(total_bytes), chunk(chunk_bytes), frames((total_bytes + chunk_bytes - 1) / chunk_bytes) {}
  size_t frame_size(size_t i) const { return std::min(chunk, total - i * chunk); }
  // Largest prefix of `bytes` made of whole frames.
  size_t whole_frames(size_t bytes) const { return bytes >= total ? total : bytes / chunk * chunk; }
};

bool would_block(int err) { return err == EAGAIN || err == EWOULDBLOCK || err == EINTR; }

[[noreturn]] void socket_failure(const char* what) {
  throw CommError(std::string(what) + ": " + std::strerror(errno));
}

// Header frame followed by data frames read out of a buffer that fills up
// as the collective progresses.
class OutStream {
 public:
  OutStream(const Layout& layout, const uint8_t* data, const std::vector<uint8_t>& header_frame)
      : layout_(layout), data_(data), header_(header_frame) {}

  bool done() const { return header_sent_ == header_.size() && frame_ == layout_.frames; }
  bool wants(size_t ready) const {
    if (header_sent_ < header_.size()) return true;
    if (frame_ == layout_.frames) return false;
    return frame_ * layout_.chunk + layout_.frame_size(frame_) <= ready;
  }

  // Sends what `ready` data bytes allow without blocking; returns bytes written.
  size_t pump(int fd, size_t ready, CollectiveStats& stats) {
    size_t moved = 0;
    while (wants(ready)) {
      ssize_t n;
      if (header_sent_ < header_.size()) {
        n = ::send(fd, header_.data() + header_sent_, header_.size() - header_sent_,
                   MSG_NOSIGNAL | MSG_DONTWAIT);
        if (n < 0) {
          if (would_block(errno)) break;
          socket_failure("send");
        }
        header_sent_ += static_cast<size_t>(n);
        moved += static_cast<size_t>(n);
        continue;
      }
      const size_t fsz = layout_.frame_size(frame_);
      const uint8_t* payload = data_ + frame_ * layout_.chunk;
      uint8_t prefix[wire::kLengthPrefix];
      const uint32_t len32 = static_cast<uint32_t>(fsz);
      std::memcpy(prefix, &len32, sizeof(prefix));
      iovec iov[2];
      int iovcnt = 0;
      if (offset_ < wire::kLengthPrefix) {
        iov[iovcnt++] = {prefix + offset_, wire::kLengthPrefix - offset_};
        iov[iovcnt++] = {const_cast<uint8_t*>(payload), fsz};
      } else {
        size_t done = offset_ - wire::kLengthPrefix;
        iov[iovcnt++] = {const_cast<uint8_t*>(payload + done), fsz - done};
      }
      msghdr msg{};
      msg.msg_iov = iov;
      msg.msg_iovlen = iovcnt;
      n = ::sendmsg(fd, &msg, MSG_NOSIGNAL | MSG_DONTWAIT);
      if (n < 0) {
        if (would_block(errno)) break;
        socket_failure("send");
      }
      offset_ += static_cast<size_t>(n);
      moved += static_cast<size_t>(n);
      if (offset_ == wire::kLengthPrefix + fsz) {
        stats.bytes_sent += fsz;
        ++frame_;
        offset_ = 0;
      }
    }
    return moved;
  }

 private:
  const Layout& layout_;
  const uint8_t* data_;
  const std::vector<uint8_t>& header_;
  size_t header_sent_ = 0;
  size_t frame_ = 0;
  size_t offset_ = 0;  // within the current frame, prefix included
};

// Where incoming payload bytes land: straight into the result buffer, or into
// a bounded ring that the reduction drains.
class Sink {
 public:
  static Sink direct(uint8_t* data) { return Sink(data, 0); }
  static Sink ring(size_t capacity) { return Sink(nullptr, capacity); }

  std::span<uint8_t> writable(size_t pos, size_t want, size_t consumed) {
    if (data_ != nullptr) return {data_ + pos, want};
    size_t off = pos % ring_.size();
    size_t space = ring_.size() - (pos - consumed);
    return {ring_.data() + off, std::min({want, space, ring_.size() - off})};
  }

  double read_double(size_t element) const {
    double v;
    std::memcpy(&v, ring_.data() + (element * sizeof(double)) % ring_.size(), sizeof(double));
    return v;
  }

 private:
  Sink(uint8_t* data, size_t capacity) : data_(data), ring_(capacity) {}
  uint8_t* data_;
  std::vector<uint8_t> ring_;
};

class InStream {
 public:
  InStream(const Layout& layout, const wire::CollectiveHeader& expected, Sink sink, const char* peer)
      : layout_(layout), expected_(expected), sink_(std::move(sink)), peer_(peer) {}

  bool done() const { return header_got_ == kHeaderFrame && frame_ == layout_.frames; }
  size_t received() const { return received_; }
  Sink& sink() { return sink_; }
  bool wants(size_t consumed) {
    if (done()) return false;
    if (header_got_ < kHeaderFrame || prefix_got_ < wire::kLengthPrefix) return true;
    return sink_.writable(received_, 1, consumed).size() > 0;
  }

  size_t pump(int fd, size_t consumed, CollectiveStats& stats) {
    size_t moved = 0;
    while (!done()) {
      std::span<uint8_t> dst;
      if (header_got_ < kHeaderFrame) {
        dst = {header_ + header_got_, kHeaderFrame - header_got_};
      } else if (prefix_got_ < wire::kLengthPrefix) {
        dst = {prefix_ + prefix_got_, wire::kLengthPrefix - prefix_got_};
      } else {
        size_t want = layout_.frame_size(frame_) - payload_got_;
        dst = sink_.writable(received_, want, consumed);
        if (dst.empty()) break;
      }
      ssize_t n = ::recv(fd, dst.data(), dst.size(), MSG_DONTWAIT);
      if (n == 0) throw CommError(std::string(peer_) + " closed the connection mid-collective");
      if (n < 0) {
        if (would_block(errno)) break;
        socket_failure("recv");
      }
      const size_t got = static_cast<size_t>(n);
      moved += got;
      if (header_got_ < kHeaderFrame) {
        header_got_ += got;
        if (header_got_ == kHeaderFrame) check_header();
      } else if (prefix_got_ < wire::kLengthPrefix) {
        prefix_got_ += got;
        if (prefix_got_ == wire::kLengthPrefix) check_prefix();
      } else {
        payload_got_ += got;
        received_ += got;
        stats.bytes_received += got;
        if (payload_got_ == layout_.frame_size(frame_)) {
          ++frame_;
          prefix_got_ = 0;
          payload_got_ = 0;
        }
      }
    }
    return moved;
  }

 private:
  static constexpr size_t kHeaderFrame = wire::kLengthPrefix + wire::kCollectiveHeaderBytes;

  void check_header() {
    uint32_t len;
    std::memcpy(&len, header_, sizeof(len));
    if (len != wire::kCollectiveHeaderBytes) {
      throw ProtocolError(std::string("bad collective header length from ") + peer_);
    }
    auto h = wire::decode_collective_header(
        std::span<const uint8_t>(header_ + wire::kLengthPrefix, wire::kCollectiveHeaderBytes));
    if (h.sequence != expected_.sequence) {
      throw ProtocolError(std::string("collective sequence mismatch with ") + peer_ + ": local " +
                          std::to_string(expected_.sequence) + ", peer " +
                          std::to_string(h.sequence));
    }
    if (h.length != expected_.length) {
      throw ProtocolError(std::string("vector length mismatch with ") + peer_ + ": local " +
                          std::to_string(expected_.length) + ", peer " + std::to_string(h.length));
    }
    if (h.op != expected_.op) {
      throw ProtocolError(std::string("reduce op mismatch with ") + peer_);
    }
  }

  void check_prefix() {
    uint32_t len;
    std::memcpy(&len, prefix_, sizeof(len));
    if (len != layout_.frame_size(frame_)) {
      throw ProtocolError(std::string("unexpected frame length from ") + peer_ + ": " +
                          std::to_string(len));
    }
  }

  const Layout& layout_;
  wire::CollectiveHeader expected_;
  Sink sink_;
  const char* peer_;
  uint8_t header_[kHeaderFrame];
  size_t header_got_ = 0;
  uint8_t prefix_[wire::kLengthPrefix];
  size_t prefix_got_ = 0;
  size_t payload_got_ = 0;
  size_t frame_ = 0;
  size_t received_ = 0;
};

std::vector<uint8_t> hello(uint32_t rank) {
  wire::ByteWriter w;
  w.u32(rank);
  return w.take();
}

}  // namespace

std::unique_ptr<TreeSession> TreeSession::join(const JoinOptions& options) {
  if (options.chunk_bytes < sizeof(double) || options.chunk_bytes > (1u << 30)) {
    throw std::invalid_argument("chunk_bytes must be in [8, 2^30]");
  }
  std::unique_ptr<TreeSession> session(new TreeSession());
  session->chunk_bytes_ = options.chunk_bytes / sizeof(double) * sizeof(double);
  session->io_timeout_ = options.io_timeout;

  net::Socket listener = net::listen_tcp(0);
  const auto deadline = net::Clock::now() + options.handshake_timeout;

  wire::Reply reply;
  {
    net::Socket coord = net::connect_tcp(options.coordinator_host, options.coordinator_port, deadline);
    wire::Handshake h{options.job_id, options.nodes, net::local_port(listener),
                      static_cast<uint8_t>(options.pass_done ? 1 : 0)};
    net::send_frame(coord, wire::encode(h), deadline);
    reply = wire::decode_reply(net::recv_frame(coord, 1 << 16, deadline));
  }
  if (reply.kind == wire::Reply::Kind::aborted) {
    throw SessionAborted("coordinator aborted the session: " + reply.reason);
  }
  if (reply.kind == wire::Reply::Kind::rejected) {
    throw WorkerRejected("coordinator rejected worker: " + reply.reason);
  }
  auto& topo = session->topology_;
  topo.position = build_topology(reply.nodes, reply.rank);
  topo.parent = reply.parent;
  topo.children = reply.children;
  if (topo.position.parent.has_value() != topo.parent.has_value() ||
      topo.position.children.size() != topo.children.size()) {
    throw ProtocolError("coordinator reply disagrees with the tree layout");
  }

  if (topo.parent) {
    session->parent_ = net::connect_tcp(topo.parent->host, topo.parent->port, deadline);
    net::send_frame(session->parent_, hello(reply.rank), deadline);
  }
  session->num_children_ = topo.children.size();
  for (size_t i = 0; i < session->num_children_; ++i) {
    net::Socket s = net::accept_until(listener, deadline);
    if (!s.valid()) throw CommError("timed out waiting for child connections");
    uint32_t child_rank = wire::ByteReader(net::recv_frame(s, 4, deadline)).u32();
    auto it = std::find(topo.position.children.begin(), topo.position.children.end(), child_rank);
    if (it == topo.position.children.end()) {
      throw ProtocolError("unexpected child rank " + std::to_string(child_rank));
    }
    auto slot = static_cast<size_t>(it - topo.position.children.begin());
    if (session->children_[slot].valid()) throw ProtocolError("child connected twice");
    session->children_[slot] = std::move(s);
  }
  if (session->parent_.valid()) net::set_nonblocking(session->parent_, true);
  for (size_t i = 0; i < session->num_children_; ++i) net::set_nonblocking(session->children_[i], true);
  return session;
}

void TreeSession::close_all() {
  parent_.close();
  for (auto& c : children_) c.close();
}

void TreeSession::do_allreduce(std::span<double> data, ReduceOp op) {
  if (broken_) throw CommError("collective session already failed");
  try {
    run_collective(data, op);
  } catch (...) {
    broken_ = true;
    close_all();
    throw;
  }
}

void TreeSession::run_collective(std::span<double> data, ReduceOp op) {
  ++sequence_;
  const size_t n = data.size();
  const Layout layout(n * sizeof(double), chunk_bytes_);
  const wire::CollectiveHeader header{sequence_, n, static_cast<uint8_t>(op)};
  const std::vector<uint8_t> header_frame = wire::frame(wire::encode(header));
  auto* bytes = reinterpret_cast<uint8_t*>(data.data());
  const size_t ring_capacity = std::max<size_t>(8 * chunk_bytes_, 1 << 20);

  std::vector<InStream> ups;
  std::vector<OutStream> downs;
  ups.reserve(num_children_);
  downs.reserve(num_children_);
  for (size_t c = 0; c < num_children_; ++c) {
    ups.emplace_back(layout, header, Sink::ring(ring_capacity), c == 0 ? "left child" : "right child");
    downs.emplace_back(layout, bytes, header_frame);
  }
  std::optional<OutStream> up_out;
  std::optional<InStream> down_in;
  if (parent_.valid()) {
    up_out.emplace(layout, bytes, header_frame);
    down_in.emplace(layout, header, Sink::direct(bytes), "parent");
  }

  size_t reduced = 0;  // elements combined with every child's contribution
  const int timeout_ms = static_cast<int>(io_timeout_.count());
  for (;;) {
    size_t avail = n;
    for (auto& u : ups) avail = std::min(avail, u.received() / sizeof(double));
    if (avail > reduced && !ups.empty()) {
      const Sink& left = ups[0].sink();
      for (size_t i = reduced; i < avail; ++i) {
        double acc = left.read_double(i);
        if (ups.size() == 2) acc = apply(op, acc, ups[1].sink().read_double(i));
        data[i] = apply(op, acc, data[i]);
      }
    }
    reduced = std::max(reduced, avail);
    const size_t consumed = reduced * sizeof(double);
    const size_t up_ready = layout.whole_frames(consumed);
    const size_t down_ready = down_in ? layout.whole_frames(down_in->received()) : up_ready;

    bool finished = std::all_of(ups.begin(), ups.end(), [](const InStream& u) { return u.done(); }) &&
                    std::all_of(downs.begin(), downs.end(), [](const OutStream& d) { return d.done(); }) &&
                    (!up_out || (up_out->done() && down_in->done()));
    if (finished) return;

    size_t moved = 0;
    for (size_t c = 0; c < num_children_; ++c) {
      moved += ups[c].pump(children_[c].fd(), consumed, stats_);
      moved += downs[c].pump(children_[c].fd(), down_ready, stats_);
    }
    if (up_out) {
      moved += up_out->pump(parent_.fd(), up_ready, stats_);
      moved += down_in->pump(parent_.fd(), 0, stats_);
    }
    if (moved > 0) continue;

    std::vector<pollfd> fds;
    for (size_t c = 0; c < num_children_; ++c) {
      short ev = 0;
      if (ups[c].wants(consumed)) ev |= POLLIN;
      if (downs[c].wants(down_ready)) ev |= POLLOUT;
      if (ev != 0) fds.push_back({children_[c].fd(), ev, 0});
    }
    if (up_out) {
      short ev = 0;
      if (up_out->wants(up_ready)) ev |= POLLOUT;
      if (!down_in->done()) ev |= POLLIN;
      if (ev != 0) fds.push_back({parent_.fd(), ev, 0});
    }
    if (fds.empty()) throw std::logic_error("allreduce stalled with nothing to wait for");
    int rc = ::poll(fds.data(), fds.size(), timeout_ms);
    if (rc == 0) throw CommError("collective timed out waiting for peers");
    if (rc < 0 && errno != EINTR) socket_failure("poll");
    for (const auto& p : fds) {
      if (p.revents & POLLNVAL) throw CommError("collective socket invalid");
      if ((p.revents & (POLLERR | POLLHUP)) && !(p.revents & POLLIN)) {
        throw CommError("peer connection lost mid-collective");
      }
    }
  }
}

}  // namespace treelearn
