#include "treelearn/learn/averaging.hpp"

#include "treelearn/errors.hpp"

namespace treelearn {

namespace {

void check_sizes(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("weights and scaling differ in length");
}

}  // namespace

DenseVector weighted_average_w(std::span<const double> w, std::span<const double> scaling, Collective& collective) {
  check_sizes(w, scaling);
  if (collective.size() == 1) return DenseVector(w.begin(), w.end());
  DenseVector denom(scaling.begin(), scaling.end());
  DenseVector numer(w.size());
  for (size_t j = 0; j < w.size(); ++j) numer[j] = scaling[j] * w[j];
  collective.allreduce(denom, ReduceOp::sum);
  collective.allreduce(numer, ReduceOp::sum);
  for (size_t j = 0; j < numer.size(); ++j) numer[j] /= denom[j];
  return numer;
}

DenseVector weighted_average_g(std::span<const double> scaling, Collective& collective) {
  if (collective.size() == 1) return DenseVector(scaling.begin(), scaling.end());
  DenseVector denom(scaling.begin(), scaling.end());
  DenseVector numer(scaling.size());
  for (size_t j = 0; j < scaling.size(); ++j) numer[j] = scaling[j] * scaling[j];
  collective.allreduce(denom, ReduceOp::sum);
  collective.allreduce(numer, ReduceOp::sum);
  for (size_t j = 0; j < numer.size(); ++j) numer[j] /= denom[j];
  return numer;
}

void average_state(ModelState& state, Collective& collective) {
  DenseVector w = weighted_average_w(state.w, state.scaling, collective);
  state.scaling = weighted_average_g(state.scaling, collective);
  state.w = std::move(w);
}

DenseVector uniform_average(std::span<const double> w, Collective& collective) {
  DenseVector sum(w.begin(), w.end());
  if (collective.size() == 1) return sum;
  collective.allreduce(sum, ReduceOp::sum);
  const double m = static_cast<double>(collective.size());
  for (double& x : sum) x /= m;
  return sum;
}

}  // namespace treelearn
