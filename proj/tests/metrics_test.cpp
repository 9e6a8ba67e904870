#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "treelearn/errors.hpp"
#include "treelearn/metrics/metrics.hpp"

using namespace treelearn;

namespace {

double pair_oracle(const std::vector<Scored>& v) {
  double wins = 0, pairs = 0;
  for (auto& p : v)
    for (auto& n : v) {
      if (p.label < 0.5 || n.label > 0.5) continue;
      pairs += 1;
      wins += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
    }
  return wins / pairs;
}

double threshold_oracle(const std::vector<Scored>& v) {
  std::set<double, std::greater<>> thresholds;
  double P = 0;
  for (auto& s : v) {
    thresholds.insert(s.score);
    P += s.label > 0.5;
  }
  double area = 0, prev_recall = 0;
  for (double t : thresholds) {
    double tp = 0, predicted = 0;
    for (auto& s : v) {
      if (s.score >= t) {
        predicted += 1;
        tp += s.label > 0.5;
      }
    }
    double recall = tp / P;
    area += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return area;
}

std::vector<Scored> random_set(std::mt19937_64& rng, size_t n, bool coarse) {
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> level(0, 5);
  std::vector<Scored> v(n);
  for (auto& s : v) {
    s.label = u(rng) < 0.3 ? 1.0 : 0.0;
    s.score = coarse ? level(rng) : u(rng) + 0.5 * s.label;
  }
  v[0].label = 1;
  v[1].label = 0;
  return v;
}

}  // namespace

TEST(Auroc, PerfectAndReversed) {
  std::vector<Scored> v{{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}};
  EXPECT_EQ(auroc(v), 1.0);
  for (auto& s : v) s.score = -s.score;
  EXPECT_EQ(auroc(v), 0.0);
}

TEST(Auroc, AllTiedIsHalf) {
  std::vector<Scored> v{{0.5, 1}, {0.5, 0}, {0.5, 0}};
  EXPECT_EQ(auroc(v), 0.5);
}

TEST(Auroc, MatchesPairCounting) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    auto v = random_set(rng, 200, t % 2);
    EXPECT_NEAR(auroc(v), pair_oracle(v), 1e-12);
  }
}

TEST(Auroc, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(2);
  auto v = random_set(rng, 300, false);
  auto w = v;
  for (auto& s : w) s.score = std::exp(3 * s.score) - 7;
  EXPECT_EQ(auroc(v), auroc(w));
  EXPECT_EQ(auprc(v), auprc(w));
}

TEST(Auroc, NeedsBothClasses) {
  std::vector<Scored> v{{0.1, 1}, {0.2, 1}};
  EXPECT_THROW(auroc(v), MetricUndefined);
  std::vector<Scored> none;
  EXPECT_THROW(auroc(none), MetricUndefined);
}

TEST(Auprc, PerfectRanking) {
  std::vector<Scored> v{{3, 1}, {2, 1}, {1, 0}, {0, 0}};
  EXPECT_EQ(auprc(v), 1.0);
}

TEST(Auprc, SinglePositiveLast) {
  for (int n : {1, 2, 5, 40}) {
    std::vector<Scored> v;
    for (int i = 0; i < n - 1; ++i) v.push_back({static_cast<double>(n - i), 0});
    v.push_back({0.0, 1});
    EXPECT_NEAR(auprc(v), 1.0 / n, 1e-15);
  }
}

TEST(Auprc, MatchesThresholdSweep) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    auto v = random_set(rng, 100, t % 2);
    EXPECT_NEAR(auprc(v), threshold_oracle(v), 1e-12);
  }
}

TEST(Auprc, NeedsPositive) {
  std::vector<Scored> v{{0.1, 0}, {0.2, 0}};
  EXPECT_THROW(auprc(v), MetricUndefined);
}

TEST(Metrics, RangesHold) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    auto v = random_set(rng, 50, t % 2);
    double a = auroc(v), p = auprc(v);
    EXPECT_GE(a, 0);
    EXPECT_LE(a, 1);
    EXPECT_GE(p, 0);
    EXPECT_LE(p, 1);
  }
}

TEST(Nll, HalfIsLog2) {
  std::vector<Scored> v{{0.5, 1}, {0.5, 0}, {0.5, 0}};
  EXPECT_EQ(nll(v), std::log(2.0));
  EXPECT_EQ(nll(std::vector<Scored>(1001, Scored{0.5, 1})), std::log(2.0));
}

TEST(Nll, ExactPredictionsNearZero) {
  std::vector<Scored> v{{1.0, 1}, {0.0, 0}};
  EXPECT_GE(nll(v), 0.0);
  EXPECT_LT(nll(v), 1e-14);
  std::vector<Scored> wrong{{0.0, 1}};
  EXPECT_NEAR(nll(wrong), -std::log(1e-15), 1e-9);
}

TEST(Nll, MatchesDirectSum) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  std::vector<Scored> v(500);
  double want = 0;
  for (auto& s : v) {
    s.score = u(rng);
    s.label = u(rng) < s.score;
    want += s.label > 0.5 ? -std::log(s.score) : -std::log(1 - s.score);
  }
  EXPECT_NEAR(nll(v), want / v.size(), 1e-12);
  EXPECT_THROW(nll(std::vector<Scored>{}), MetricUndefined);
}

TEST(CommCost, TableRows) {
  CostInputs in;
  in.d = 1000;
  in.T = 15;
  EXPECT_EQ(comm_cost(CostFamily::hybrid, in).value, 15000);
  in = {};
  in.n = 1e6;
  in.s = 100;
  in.d = 1000;
  EXPECT_EQ(comm_cost(CostFamily::overcomplete, in).value, 1e8 + 1e3);
  EXPECT_EQ(comm_cost(CostFamily::overcomplete, in).formula, "n*s + d");
}

TEST(CommCost, MinibatchAtRootN) {
  CostInputs in;
  in.n = 1e6;
  in.b = 1e3;
  in.d = 500;
  in.T = 4;
  in.s = 20;
  EXPECT_DOUBLE_EQ(comm_cost(CostFamily::minibatch_dense, in).value, 500 * 4 * std::sqrt(1e6));
  EXPECT_DOUBLE_EQ(comm_cost(CostFamily::minibatch_sparse, in).value, 1e6 * 20 * 4);
  in.m = 10;
  EXPECT_DOUBLE_EQ(comm_cost(CostFamily::parallel_online, in).value, 1e6 * 20 / 10 + 1e6 * 4);
}

TEST(CommCost, MissingParameters) {
  CostInputs in;
  in.d = 10;
  EXPECT_THROW(comm_cost(CostFamily::hybrid, in), std::invalid_argument);
  in.n = 5;
  in.T = 1;
  EXPECT_THROW(comm_cost(CostFamily::minibatch_dense, in), std::invalid_argument);
  in.b = 10;
  EXPECT_THROW(comm_cost(CostFamily::minibatch_dense, in), std::invalid_argument);
  EXPECT_EQ(parse_cost_family("minibatch-dense"), CostFamily::minibatch_dense);
  EXPECT_THROW(parse_cost_family("gossip"), std::invalid_argument);
}
