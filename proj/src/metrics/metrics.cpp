#include "treelearn/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "treelearn/errors.hpp"

namespace treelearn {

namespace {

bool positive(const Scored& s) { return s.label > 0.5; }

std::vector<Scored> descending(std::span<const Scored> set) {
  std::vector<Scored> v(set.begin(), set.end());
  for (const Scored& s : v) {
    if (std::isnan(s.score)) throw MetricUndefined("NaN score");
  }
  std::sort(v.begin(), v.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  return v;
}

// Calls step(tp, fp) after each group of tied scores.
template <class F>
void sweep(const std::vector<Scored>& v, F step) {
  double tp = 0, fp = 0;
  for (size_t i = 0; i < v.size();) {
    size_t j = i;
    for (; j < v.size() && v[j].score == v[i].score; ++j) (positive(v[j]) ? tp : fp) += 1;
    step(tp, fp);
    i = j;
  }
}

}  // namespace

double auroc(std::span<const Scored> set) {
  auto v = descending(set);
  const double P = static_cast<double>(std::count_if(v.begin(), v.end(), positive));
  const double N = static_cast<double>(v.size()) - P;
  if (P == 0 || N == 0) throw MetricUndefined("auROC needs both positive and negative examples");
  double area = 0, prev_tp = 0, prev_fp = 0;
  sweep(v, [&](double tp, double fp) {
    area += (fp - prev_fp) * (tp + prev_tp) / 2;
    prev_tp = tp;
    prev_fp = fp;
  });
  return area / (P * N);
}

double auprc(std::span<const Scored> set) {
  auto v = descending(set);
  const double P = static_cast<double>(std::count_if(v.begin(), v.end(), positive));
  if (P == 0) throw MetricUndefined("auPRC needs at least one positive example");
  double area = 0, prev_tp = 0;
  sweep(v, [&](double tp, double fp) {
    area += (tp - prev_tp) / P * (tp / (tp + fp));
    prev_tp = tp;
  });
  return area;
}

double nll(std::span<const Scored> probabilities) {
  if (probabilities.empty()) throw MetricUndefined("NLL of an empty set");
  constexpr double kClamp = 1e-15;
  // running mean, exact when every term is equal
  double mean = 0;
  size_t seen = 0;
  for (const Scored& s : probabilities) {
    const double p = std::clamp(s.score, kClamp, 1 - kClamp);
    const double term = -(positive(s) ? std::log(p) : std::log1p(-p));
    mean += (term - mean) / static_cast<double>(++seen);
  }
  return mean;
}

std::string_view to_string(CostFamily family) {
  switch (family) {
    case CostFamily::hybrid: return "hybrid";
    case CostFamily::bundle: return "bundle";
    case CostFamily::online: return "online";
    case CostFamily::overcomplete: return "overcomplete";
    case CostFamily::minibatch_dense: return "minibatch-dense";
    case CostFamily::minibatch_sparse: return "minibatch-sparse";
    case CostFamily::parallel_online: return "parallel-online";
  }
  return "?";
}

CostFamily parse_cost_family(std::string_view name) {
  for (CostFamily f : {CostFamily::hybrid, CostFamily::bundle, CostFamily::online, CostFamily::overcomplete, CostFamily::minibatch_dense,
                       CostFamily::minibatch_sparse, CostFamily::parallel_online}) {
    if (name == to_string(f)) return f;
  }
  throw std::invalid_argument("unknown cost family '" + std::string(name) + "'");
}

CostEstimate comm_cost(CostFamily family, const CostInputs& in) {
  auto need = [](const std::optional<double>& v, const char* name) {
    if (!v) throw std::invalid_argument(std::string("missing parameter ") + name);
    if (!(*v > 0)) throw std::invalid_argument(std::string("parameter ") + name + " must be positive");
    return *v;
  };
  switch (family) {
    case CostFamily::hybrid:
      return {"d*T", need(in.d, "d") * need(in.T, "T")};
    case CostFamily::bundle:
    case CostFamily::online:
      return {"d*T", need(in.d, "d") * need(in.T, "T")};
    case CostFamily::overcomplete: {
      // the replication factor is informational; the bound is n*s + d
      if (in.rep) need(in.rep, "rep");
      return {"n*s + d", need(in.n, "n") * need(in.s, "s") + need(in.d, "d")};
    }
    case CostFamily::minibatch_dense: {
      double n = need(in.n, "n"), b = need(in.b, "b");
      if (b > n) throw std::invalid_argument("minibatch size exceeds n");
      return {"d*T*n/b", need(in.d, "d") * need(in.T, "T") * n / b};
    }
    case CostFamily::minibatch_sparse:
      return {"n*s*T", need(in.n, "n") * need(in.s, "s") * need(in.T, "T")};
    case CostFamily::parallel_online: {
      double n = need(in.n, "n");
      return {"n*s/m + n*T", n * need(in.s, "s") / need(in.m, "m") + n * need(in.T, "T")};
    }
  }
  throw std::invalid_argument("unknown cost family");
}

}  // namespace treelearn
