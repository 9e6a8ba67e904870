#include "treelearn/comm/wire.hpp"

#include <limits>

namespace treelearn::wire {

void ByteWriter::str16(std::string_view s) {
  if (s.size() > std::numeric_limits<uint16_t>::max()) {
    throw ProtocolError("string field longer than 65535 bytes");
  }
  u16(static_cast<uint16_t>(s.size()));
  bytes(s);
}

std::string ByteReader::bytes(size_t n) {
  need(n);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

void ByteReader::need(size_t n) const {
  if (data_.size() - pos_ < n) {
    throw ProtocolError("truncated message: need " + std::to_string(n) + " bytes, have " +
                        std::to_string(data_.size() - pos_));
  }
}

void ByteReader::expect_end() const {
  if (pos_ != data_.size()) {
    throw ProtocolError("trailing bytes in message: " + std::to_string(data_.size() - pos_));
  }
}

std::vector<uint8_t> encode(const Handshake& h) {
  ByteWriter w;
  w.bytes(h.job_id);
  w.u32(h.nodes);
  w.u16(h.data_port);
  w.u8(h.pass_done);
  return w.take();
}

Handshake decode_handshake(std::span<const uint8_t> payload) {
  constexpr size_t kFixed = 4 + 2 + 1;
  if (payload.size() < kFixed) {
    throw ProtocolError("handshake shorter than its fixed fields");
  }
  ByteReader r(payload);
  Handshake h;
  h.job_id = r.bytes(payload.size() - kFixed);
  h.nodes = r.u32();
  h.data_port = r.u16();
  h.pass_done = r.u8();
  return h;
}

std::vector<uint8_t> encode(const Reply& r) {
  ByteWriter w;
  switch (r.kind) {
    case Reply::Kind::aborted:
      w.u32(kReplyAbort);
      w.str16(r.reason);
      return w.take();
    case Reply::Kind::rejected:
      w.u32(kReplyRejected);
      w.str16(r.reason);
      return w.take();
    case Reply::Kind::assigned:
      break;
  }
  w.u32(r.rank);
  if (r.parent) {
    if (r.parent->host.empty()) throw ProtocolError("parent endpoint with empty host");
    w.str16(r.parent->host);
    w.u16(r.parent->port);
  } else {
    w.str16("");
    w.u16(0);
  }
  if (r.children.size() > 2) throw ProtocolError("binary tree node with more than two children");
  w.u8(static_cast<uint8_t>(r.children.size()));
  for (const auto& c : r.children) {
    w.str16(c.host);
    w.u16(c.port);
  }
  w.u32(r.nodes);
  return w.take();
}

Reply decode_reply(std::span<const uint8_t> payload) {
  ByteReader rd(payload);
  Reply r;
  uint32_t rank = rd.u32();
  if (rank == kReplyAbort || rank == kReplyRejected) {
    r.kind = rank == kReplyAbort ? Reply::Kind::aborted : Reply::Kind::rejected;
    r.reason = rd.str16();
    rd.expect_end();
    return r;
  }
  r.rank = rank;
  std::string host = rd.str16();
  uint16_t port = rd.u16();
  if (!host.empty()) r.parent = Endpoint{std::move(host), port};
  uint8_t nchild = rd.u8();
  if (nchild > 2) throw ProtocolError("reply lists more than two children");
  for (uint8_t i = 0; i < nchild; ++i) {
    Endpoint e;
    e.host = rd.str16();
    e.port = rd.u16();
    r.children.push_back(std::move(e));
  }
  r.nodes = rd.u32();
  rd.expect_end();
  return r;
}

std::vector<uint8_t> encode(const CollectiveHeader& h) {
  ByteWriter w;
  w.u64(h.sequence);
  w.u64(h.length);
  w.u8(h.op);
  return w.take();
}

CollectiveHeader decode_collective_header(std::span<const uint8_t> payload) {
  ByteReader r(payload);
  CollectiveHeader h;
  h.sequence = r.u64();
  h.length = r.u64();
  h.op = r.u8();
  r.expect_end();
  return h;
}

std::vector<uint8_t> frame(std::span<const uint8_t> payload) {
  if (payload.size() > std::numeric_limits<uint32_t>::max()) {
    throw ProtocolError("frame payload exceeds u32 length");
  }
  ByteWriter w;
  w.u32(static_cast<uint32_t>(payload.size()));
  std::vector<uint8_t> out = w.take();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

}  // namespace treelearn::wire
