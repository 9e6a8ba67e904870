#pragma once

#include <stdexcept>
#include <string>

namespace treelearn {

// Malformed or unexpected bytes on a coordinator or data-plane connection.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Socket failure, peer disconnect or timeout. The collective that raised it
// is unusable afterwards.
class CommError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The coordinator gave up on the session and told the worker so.
class SessionAborted : public CommError {
 public:
  using CommError::CommError;
};

// The coordinator turned the worker away, e.g. another duplicate of its
// shard was admitted first.
class WorkerRejected : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

class DimensionError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class MetricUndefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace treelearn
