#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace treelearn {

enum class ReduceOp : uint8_t { sum = 0, max = 1, min = 2 };

std::string_view to_string(ReduceOp op);
ReduceOp reduce_op_from_code(uint8_t code);

inline double apply(ReduceOp op, double a, double b) {
  switch (op) {
    case ReduceOp::max: return a < b ? b : a;
    case ReduceOp::min: return b < a ? b : a;
    case ReduceOp::sum: break;
  }
  return a + b;
}

struct CollectiveStats {
  uint64_t vector_calls = 0;
  uint64_t scalar_calls = 0;
  uint64_t bytes_sent = 0;      // payload bytes of data frames
  uint64_t bytes_received = 0;
  double seconds = 0.0;         // wall time spent inside collectives
};

// A node's handle on an AllReduce group. Collective calls block until every
// node of the group has made the matching call.
class Collective {
 public:
  virtual ~Collective() = default;

  virtual uint32_t rank() const = 0;
  virtual uint32_t size() const = 0;

  // In place: on return every node holds the identical reduction.
  void allreduce(std::span<double> data, ReduceOp op = ReduceOp::sum);
  double allreduce_scalar(double x, ReduceOp op = ReduceOp::sum);

  const CollectiveStats& stats() const { return stats_; }

  // Run outside the timed region, just before and just after every call.
  void set_hooks(std::function<void()> before, std::function<void()> after) {
    before_ = std::move(before);
    after_ = std::move(after);
  }

 protected:
  virtual void do_allreduce(std::span<double> data, ReduceOp op) = 0;
  CollectiveStats stats_;

 private:
  void timed(std::span<double> data, ReduceOp op);
  std::function<void()> before_, after_;
};

// Group of one: every collective is the identity.
class SoloCollective final : public Collective {
 public:
  uint32_t rank() const override { return 0; }
  uint32_t size() const override { return 1; }

 protected:
  void do_allreduce(std::span<double>, ReduceOp) override {}
};

// Reduction of per-rank contributions in the order the tree applies it:
// at every rank, left subtree, then right subtree, then the rank's own value.
// contributions[r] is rank r's vector; all must have the same length.
std::vector<double> tree_order_reduce(std::span<const std::vector<double>> contributions,
                                      ReduceOp op = ReduceOp::sum);
double tree_order_reduce_scalar(std::span<const double> contributions, ReduceOp op = ReduceOp::sum);

}  // namespace treelearn
