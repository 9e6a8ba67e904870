#include "treelearn/learn/global_objective.hpp"

#include <algorithm>

#include "treelearn/errors.hpp"

namespace treelearn {

namespace {

void check_span(std::span<const double> v, size_t d, const char* what) {
  if (v.size() != d) throw DimensionError(std::string(what) + " length does not match the objective dimension");
}

}  // namespace

double GlobalObjective::value(std::span<const double> w) {
  check_span(w, dimension(), "weight");
  const LossKind loss = objective_.loss;
  ++scalar_calls_;
  double f = reduce(LocalScalar([&](const Dataset& shard) { return local_loss(w, shard, loss); }));
  return f + regularizer(w, objective_.lambda);
}

double GlobalObjective::value_and_gradient(std::span<const double> w, std::span<double> grad) {
  const size_t d = dimension();
  check_span(w, d, "weight");
  check_span(grad, d, "gradient");
  const LossKind loss = objective_.loss;
  ++vector_calls_;
  std::vector<double> packed = reduce(LocalVector([&](const Dataset& shard) {
    std::vector<double> v(d + 1, 0.0);
    v[d] = accumulate_loss_and_gradient(w, shard, loss, std::span<double>(v).first(d));
    return v;
  }));
  for (size_t j = 0; j < d; ++j) grad[j] = packed[j] + objective_.lambda * w[j];
  return packed[d] + regularizer(w, objective_.lambda);
}

double GlobalObjective::value_gradient_and_curvature(std::span<const double> w, std::span<double> grad,
                                                     std::span<double> diag) {
  const size_t d = dimension();
  check_span(w, d, "weight");
  check_span(grad, d, "gradient");
  check_span(diag, d, "curvature");
  const LossKind loss = objective_.loss;
  ++vector_calls_;
  std::vector<double> packed = reduce(LocalVector([&](const Dataset& shard) {
    std::vector<double> v(2 * d + 1, 0.0);
    std::span<double> all(v);
    v[2 * d] = accumulate_loss_and_gradient(w, shard, loss, all.first(d));
    accumulate_hessian_diagonal(w, shard, loss, all.subspan(d, d));
    return v;
  }));
  for (size_t j = 0; j < d; ++j) {
    grad[j] = packed[j] + objective_.lambda * w[j];
    diag[j] = packed[d + j] + objective_.lambda;
  }
  return packed[2 * d] + regularizer(w, objective_.lambda);
}

double GlobalObjective::example_count() {
  ++scalar_calls_;
  return reduce(LocalScalar([](const Dataset& shard) { return static_cast<double>(shard.size()); }));
}

DistributedObjective::DistributedObjective(const Dataset& shard, Objective objective, Collective& collective)
    : GlobalObjective(objective), shard_(shard), collective_(collective) {
  check_dimension(shard, objective.dimension);
}

std::vector<double> DistributedObjective::reduce(const LocalVector& local) {
  std::vector<double> v = local(shard_);
  collective_.allreduce(v, ReduceOp::sum);
  return v;
}

double DistributedObjective::reduce(const LocalScalar& local) {
  return collective_.allreduce_scalar(local(shard_), ReduceOp::sum);
}

ShardedObjective::ShardedObjective(std::span<const Dataset> shards, Objective objective)
    : GlobalObjective(objective), shards_(shards) {
  if (shards.empty()) throw std::invalid_argument("sharded objective needs at least one shard");
  for (const Dataset& s : shards) check_dimension(s, objective.dimension);
}

std::vector<double> ShardedObjective::reduce(const LocalVector& local) {
  std::vector<std::vector<double>> parts;
  parts.reserve(shards_.size());
  for (const Dataset& s : shards_) parts.push_back(local(s));
  return tree_order_reduce(parts, ReduceOp::sum);
}

double ShardedObjective::reduce(const LocalScalar& local) {
  std::vector<double> parts;
  parts.reserve(shards_.size());
  for (const Dataset& s : shards_) parts.push_back(local(s));
  return tree_order_reduce_scalar(parts, ReduceOp::sum);
}

}  // namespace treelearn
