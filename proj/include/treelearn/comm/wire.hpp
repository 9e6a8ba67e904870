#pragma once

// Byte-level encoding shared by the coordinator handshake and the data plane.
// Every integer and float on the wire is little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treelearn/errors.hpp"

namespace treelearn::wire {

static_assert(std::endian::native == std::endian::little,
              "data frames are sent straight from double buffers");

inline constexpr size_t kLengthPrefix = 4;
inline constexpr size_t kCollectiveHeaderBytes = 17;
inline constexpr uint32_t kReplyAbort = 0xFFFFFFFFu;
inline constexpr uint32_t kReplyRejected = 0xFFFFFFFEu;

class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { put(v); }
  void u32(uint32_t v) { put(v); }
  void u64(uint64_t v) { put(v); }
  void f64(double v) { put(v); }
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  // u16 length followed by the bytes
  void str16(std::string_view s);

  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  template <class T>
  void put(T v) {
    uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf_.insert(buf_.end(), raw, raw + sizeof(T));
  }
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}
  uint8_t u8() { return get<uint8_t>(); }
  uint16_t u16() { return get<uint16_t>(); }
  uint32_t u32() { return get<uint32_t>(); }
  uint64_t u64() { return get<uint64_t>(); }
  double f64() { return get<double>(); }
  std::string bytes(size_t n);
  std::string str16() { return bytes(u16()); }
  size_t remaining() const { return data_.size() - pos_; }
  void expect_end() const;

 private:
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(size_t n) const;
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

struct Endpoint {
  std::string host;
  uint16_t port = 0;
  bool operator==(const Endpoint&) const = default;
};

// worker -> coordinator. The job id fills the payload up to the trailing
// fixed-size fields.
struct Handshake {
  std::string job_id;
  uint32_t nodes = 0;  // 0: take the coordinator's count
  uint16_t data_port = 0;
  uint8_t pass_done = 0;
  bool operator==(const Handshake&) const = default;
};

// coordinator -> worker
struct Reply {
  enum class Kind { assigned, aborted, rejected };
  Kind kind = Kind::assigned;
  uint32_t rank = 0;
  std::optional<Endpoint> parent;
  std::vector<Endpoint> children;
  uint32_t nodes = 0;
  std::string reason;  // aborted / rejected only
  bool operator==(const Reply&) const = default;
};

// Sent on every tree link, in both directions, before the data frames of a
// collective.
struct CollectiveHeader {
  uint64_t sequence = 0;
  uint64_t length = 0;
  uint8_t op = 0;
  bool operator==(const CollectiveHeader&) const = default;
};

std::vector<uint8_t> encode(const Handshake& h);
Handshake decode_handshake(std::span<const uint8_t> payload);

std::vector<uint8_t> encode(const Reply& r);
Reply decode_reply(std::span<const uint8_t> payload);

std::vector<uint8_t> encode(const CollectiveHeader& h);
CollectiveHeader decode_collective_header(std::span<const uint8_t> payload);

// Prepends the u32 length prefix.
std::vector<uint8_t> frame(std::span<const uint8_t> payload);

}  // namespace treelearn::wire
