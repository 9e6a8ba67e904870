#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace treelearn::net {

using Clock = std::chrono::steady_clock;

// Owning TCP socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { close(); }
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = o.release();
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int f = fd_;
    fd_ = -1;
    return f;
  }
  void close();

 private:
  int fd_ = -1;
};

// Listens on all interfaces; port 0 picks an ephemeral port.
Socket listen_tcp(uint16_t port, int backlog = 128);
uint16_t local_port(const Socket& s);
std::string peer_host(const Socket& s);

// Retries refused connections until the deadline.
Socket connect_tcp(const std::string& host, uint16_t port, Clock::time_point deadline);
// Returns an invalid socket on timeout.
Socket accept_until(const Socket& listener, Clock::time_point deadline);

void set_nonblocking(const Socket& s, bool on);
void set_nodelay(const Socket& s);

// Blocking helpers with a deadline; throw CommError on failure, EOF or timeout.
void write_all(const Socket& s, std::span<const uint8_t> data, Clock::time_point deadline);
void read_exact(const Socket& s, std::span<uint8_t> data, Clock::time_point deadline);

void send_frame(const Socket& s, std::span<const uint8_t> payload, Clock::time_point deadline);
std::vector<uint8_t> recv_frame(const Socket& s, uint32_t max_len, Clock::time_point deadline);

}  // namespace treelearn::net
