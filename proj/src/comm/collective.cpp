#include "treelearn/comm/collective.hpp"

#include <chrono>
#include <stdexcept>
#include <string>

#include "treelearn/comm/topology.hpp"
#include "treelearn/errors.hpp"

namespace treelearn {

std::string_view to_string(ReduceOp op) {
  switch (op) {
    case ReduceOp::sum: return "sum";
    case ReduceOp::max: return "max";
    case ReduceOp::min: return "min";
  }
  return "?";
}

ReduceOp reduce_op_from_code(uint8_t code) {
  if (code > static_cast<uint8_t>(ReduceOp::min)) {
    throw ProtocolError("unknown reduce op code " + std::to_string(code));
  }
  return static_cast<ReduceOp>(code);
}

void Collective::timed(std::span<double> data, ReduceOp op) {
  if (before_) before_();
  auto t0 = std::chrono::steady_clock::now();
  do_allreduce(data, op);
  stats_.seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (after_) after_();
}

void Collective::allreduce(std::span<double> data, ReduceOp op) {
  ++stats_.vector_calls;
  timed(data, op);
}

double Collective::allreduce_scalar(double x, ReduceOp op) {
  ++stats_.scalar_calls;
  timed(std::span<double>(&x, 1), op);
  return x;
}

namespace {

void reduce_subtree(std::span<const std::vector<double>> contrib, uint32_t rank, ReduceOp op,
                    std::vector<double>& out) {
  const auto pos = build_topology(static_cast<uint32_t>(contrib.size()), rank);
  const auto& own = contrib[rank];
  if (pos.children.empty()) {
    out = own;
    return;
  }
  reduce_subtree(contrib, pos.children[0], op, out);
  if (pos.children.size() == 2) {
    std::vector<double> right;
    reduce_subtree(contrib, pos.children[1], op, right);
    for (size_t i = 0; i < out.size(); ++i) out[i] = apply(op, out[i], right[i]);
  }
  for (size_t i = 0; i < out.size(); ++i) out[i] = apply(op, out[i], own[i]);
}

}  // namespace

std::vector<double> tree_order_reduce(std::span<const std::vector<double>> contributions,
                                      ReduceOp op) {
  if (contributions.empty()) throw std::invalid_argument("tree_order_reduce: no contributions");
  for (const auto& c : contributions) {
    if (c.size() != contributions[0].size()) {
      throw std::invalid_argument("tree_order_reduce: length mismatch");
    }
  }
  std::vector<double> out;
  reduce_subtree(contributions, 0, op, out);
  return out;
}

double tree_order_reduce_scalar(std::span<const double> contributions, ReduceOp op) {
  std::vector<std::vector<double>> wrapped;
  wrapped.reserve(contributions.size());
  for (double x : contributions) wrapped.push_back({x});
  return tree_order_reduce(wrapped, op)[0];
}

}  // namespace treelearn
