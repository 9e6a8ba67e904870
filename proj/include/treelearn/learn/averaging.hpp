#pragma once

#include <span>

#include "treelearn/comm/collective.hpp"
#include "treelearn/learn/online.hpp"

namespace treelearn {

// (sum_k G^k)^{-1} (sum_k G^k w^k) per coordinate, via two allreduce calls.
DenseVector weighted_average_w(std::span<const double> w, std::span<const double> scaling, Collective& collective);

// (sum_k G^k)^{-1} (sum_k (G^k)^2) per coordinate, via two allreduce calls.
DenseVector weighted_average_g(std::span<const double> scaling, Collective& collective);

// Replaces both w and G with their averages (four collectives).
void average_state(ModelState& state, Collective& collective);

// Plain mean over nodes, one allreduce call.
DenseVector uniform_average(std::span<const double> w, Collective& collective);

}  // namespace treelearn
