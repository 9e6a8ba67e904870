#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "treelearn/comm/collective.hpp"
#include "treelearn/data/dataset.hpp"
#include "treelearn/model/objective.hpp"

namespace treelearn {

// The regularized objective summed over every shard of the group. Local
// contributions are packed into one vector and reduced in tree order, so each
// evaluation below costs exactly one collective call.
class GlobalObjective {
 public:
  explicit GlobalObjective(Objective objective) : objective_(objective) {}
  virtual ~GlobalObjective() = default;

  const Objective& objective() const { return objective_; }
  size_t dimension() const { return objective_.dimension; }

  // Loss sum plus lambda/2 |w|^2. One scalar collective.
  double value(std::span<const double> w);
  // As value(), writing the regularized gradient. One vector collective.
  double value_and_gradient(std::span<const double> w, std::span<double> grad);
  // As value_and_gradient(), also writing the Hessian diagonal plus lambda.
  // One vector collective of length 2d+1.
  double value_gradient_and_curvature(std::span<const double> w, std::span<double> grad,
                                      std::span<double> diag);
  // Number of examples in the group. One scalar collective.
  double example_count();

  uint64_t vector_calls() const { return vector_calls_; }
  uint64_t scalar_calls() const { return scalar_calls_; }

 protected:
  using LocalVector = std::function<std::vector<double>(const Dataset&)>;
  using LocalScalar = std::function<double(const Dataset&)>;
  virtual std::vector<double> reduce(const LocalVector& local) = 0;
  virtual double reduce(const LocalScalar& local) = 0;

 private:
  Objective objective_;
  uint64_t vector_calls_ = 0;
  uint64_t scalar_calls_ = 0;
};

// One node's view: its shard plus the group's collective.
class DistributedObjective final : public GlobalObjective {
 public:
  DistributedObjective(const Dataset& shard, Objective objective, Collective& collective);

 protected:
  std::vector<double> reduce(const LocalVector& local) override;
  double reduce(const LocalScalar& local) override;

 private:
  const Dataset& shard_;
  Collective& collective_;
};

// Every shard of the group held by one process; contributions are combined
// in the same order the tree would use with shards[r] on rank r.
class ShardedObjective final : public GlobalObjective {
 public:
  ShardedObjective(std::span<const Dataset> shards, Objective objective);

 protected:
  std::vector<double> reduce(const LocalVector& local) override;
  double reduce(const LocalScalar& local) override;

 private:
  std::span<const Dataset> shards_;
};

}  // namespace treelearn
