#include "treelearn/comm/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "treelearn/comm/wire.hpp"
#include "treelearn/errors.hpp"

namespace treelearn::net {

namespace {

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

int remaining_ms(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left < 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

// Waits for `events` on fd; false on timeout.
bool wait_for(int fd, short events, Clock::time_point deadline) {
  for (;;) {
    pollfd p{fd, events, 0};
    int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw CommError(errno_text("poll"));
  }
}

sockaddr_in resolve(const std::string& host, uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res); rc != 0 || res == nullptr) {
    throw CommError("cannot resolve host '" + host + "': " + ::gai_strerror(rc));
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

}  // namespace

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket listen_tcp(uint16_t port, int backlog) {
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw CommError(errno_text("socket"));
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw CommError(errno_text(("bind port " + std::to_string(port)).c_str()));
  }
  if (::listen(s.fd(), backlog) != 0) throw CommError(errno_text("listen"));
  return s;
}

uint16_t local_port(const Socket& s) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    throw CommError(errno_text("getsockname"));
  }
  return ntohs(addr.sin_port);
}

std::string peer_host(const Socket& s) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getpeername(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    throw CommError(errno_text("getpeername"));
  }
  char buf[INET_ADDRSTRLEN];
  ::inet_ntop(AF_INET, &addr.sin_addr, buf, sizeof(buf));
  return buf;
}

Socket connect_tcp(const std::string& host, uint16_t port, Clock::time_point deadline) {
  sockaddr_in addr = resolve(host, port);
  for (;;) {
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) throw CommError(errno_text("socket"));
    if (::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
      set_nodelay(s);
      return s;
    }
    int err = errno;
    if ((err != ECONNREFUSED && err != EINTR && err != ETIMEDOUT) || Clock::now() >= deadline) {
      errno = err;
      throw CommError(errno_text(("connect " + host + ":" + std::to_string(port)).c_str()));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

Socket accept_until(const Socket& listener, Clock::time_point deadline) {
  for (;;) {
    if (!wait_for(listener.fd(), POLLIN, deadline)) return Socket();
    int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      Socket s(fd);
      set_nodelay(s);
      return s;
    }
    if (errno != EINTR && errno != EAGAIN && errno != ECONNABORTED) {
      throw CommError(errno_text("accept"));
    }
  }
}

void set_nonblocking(const Socket& s, bool on) {
  int flags = ::fcntl(s.fd(), F_GETFL, 0);
  flags = on ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK);
  if (::fcntl(s.fd(), F_SETFL, flags) != 0) throw CommError(errno_text("fcntl"));
}

void set_nodelay(const Socket& s) {
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

void write_all(const Socket& s, std::span<const uint8_t> data, Clock::time_point deadline) {
  size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::send(s.fd(), data.data() + done, data.size() - done, MSG_NOSIGNAL | MSG_DONTWAIT);
    if (n > 0) {
      done += static_cast<size_t>(n);
      continue;
    }
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) {
      if (!wait_for(s.fd(), POLLOUT, deadline)) throw CommError("send timed out");
      continue;
    }
    throw CommError(errno_text("send"));
  }
}

void read_exact(const Socket& s, std::span<uint8_t> data, Clock::time_point deadline) {
  size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::recv(s.fd(), data.data() + done, data.size() - done, MSG_DONTWAIT);
    if (n > 0) {
      done += static_cast<size_t>(n);
      continue;
    }
    if (n == 0) throw CommError("peer closed the connection");
    if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) {
      if (!wait_for(s.fd(), POLLIN, deadline)) throw CommError("receive timed out");
      continue;
    }
    throw CommError(errno_text("recv"));
  }
}

void send_frame(const Socket& s, std::span<const uint8_t> payload, Clock::time_point deadline) {
  write_all(s, wire::frame(payload), deadline);
}

std::vector<uint8_t> recv_frame(const Socket& s, uint32_t max_len, Clock::time_point deadline) {
  uint8_t prefix[wire::kLengthPrefix];
  read_exact(s, prefix, deadline);
  uint32_t len = wire::ByteReader(prefix).u32();
  if (len > max_len) {
    throw ProtocolError("frame of " + std::to_string(len) + " bytes exceeds limit " +
                        std::to_string(max_len));
  }
  std::vector<uint8_t> payload(len);
  read_exact(s, payload, deadline);
  return payload;
}

}  // namespace treelearn::net
