#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstring>
#include <future>
#include <limits>
#include <random>
#include <thread>

#include "cluster.hpp"
#include "treelearn/comm/topology.hpp"
#include "treelearn/comm/wire.hpp"
#include "treelearn/errors.hpp"

using namespace treelearn;
using treelearn::test_support::run_thread_cluster;
using treelearn::test_support::tree_oracle;

namespace {

std::vector<double> random_vector(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 10.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST(Topology, SingleNodeIsRoot) {
  auto t = build_topology(1, 0);
  EXPECT_FALSE(t.parent);
  EXPECT_TRUE(t.children.empty());
}

TEST(Topology, HeapLayout) {
  auto root = build_topology(3, 0);
  EXPECT_FALSE(root.parent);
  EXPECT_EQ(root.children, (std::vector<uint32_t>{1, 2}));
  auto leaf = build_topology(6, 5);
  EXPECT_EQ(leaf.parent, 2u);
  EXPECT_TRUE(leaf.children.empty());
}

TEST(Topology, RejectsBadRank) {
  EXPECT_THROW(build_topology(4, 4), std::invalid_argument);
  EXPECT_THROW(build_topology(0, 0), std::invalid_argument);
}

TEST(Topology, InvariantsForAllSizes) {
  for (uint32_t m = 1; m <= 200; ++m) {
    std::vector<int> parent_refs(m, 0);
    size_t child_links = 0;
    for (uint32_t r = 0; r < m; ++r) {
      auto t = build_topology(m, r);
      EXPECT_EQ(t, build_topology(m, r));
      EXPECT_EQ(t.parent.has_value(), r != 0);
      if (t.parent) EXPECT_EQ(*t.parent, (r - 1) / 2);
      EXPECT_LE(t.children.size(), 2u);
      for (uint32_t c : t.children) {
        EXPECT_EQ(build_topology(m, c).parent, r);
        parent_refs[c]++;
      }
      child_links += t.children.size();
    }
    // m - 1 edges and every non-root has exactly one parent: a spanning tree.
    EXPECT_EQ(child_links, m - 1);
    for (uint32_t r = 1; r < m; ++r) EXPECT_EQ(parent_refs[r], 1);
    EXPECT_LE(tree_depth(m), static_cast<uint32_t>(std::ceil(std::log2(m + 1.0))));
  }
}

TEST(Wire, HandshakeRoundTrip) {
  std::mt19937 rng(7);
  for (int i = 0; i < 50; ++i) {
    wire::Handshake h;
    h.job_id = std::string(rng() % 40, 'a' + static_cast<char>(rng() % 26));
    h.nodes = rng();
    h.data_port = static_cast<uint16_t>(rng());
    h.pass_done = rng() % 2;
    EXPECT_EQ(wire::decode_handshake(wire::encode(h)), h);
  }
}

TEST(Wire, HandshakeLayoutIsLittleEndian) {
  auto bytes = wire::encode(wire::Handshake{"ab", 3, 0x1234, 1});
  std::vector<uint8_t> expect{'a', 'b', 3, 0, 0, 0, 0x34, 0x12, 1};
  EXPECT_EQ(bytes, expect);
}

TEST(Wire, ReplyRoundTrip) {
  wire::Reply r;
  r.rank = 4;
  r.nodes = 9;
  r.parent = wire::Endpoint{"10.0.0.1", 4000};
  r.children = {{"10.0.0.2", 1}, {"host-b", 65535}};
  EXPECT_EQ(wire::decode_reply(wire::encode(r)), r);

  wire::Reply root;
  root.nodes = 1;
  EXPECT_EQ(wire::decode_reply(wire::encode(root)), root);

  wire::Reply abort;
  abort.kind = wire::Reply::Kind::aborted;
  abort.reason = "timeout";
  EXPECT_EQ(wire::decode_reply(wire::encode(abort)), abort);
}

TEST(Wire, TruncatedMessagesAreProtocolErrors) {
  auto bytes = wire::encode(wire::CollectiveHeader{1, 2, 0});
  EXPECT_EQ(bytes.size(), wire::kCollectiveHeaderBytes);
  bytes.pop_back();
  EXPECT_THROW(wire::decode_collective_header(bytes), ProtocolError);
  EXPECT_THROW(wire::decode_handshake(std::vector<uint8_t>{1, 2}), ProtocolError);
}

TEST(Wire, FramePrefixesLength) {
  std::vector<uint8_t> payload{9, 8, 7};
  auto f = wire::frame(payload);
  EXPECT_EQ(f, (std::vector<uint8_t>{3, 0, 0, 0, 9, 8, 7}));
}

TEST(JobTag, Parsing) {
  auto plain = parse_job_tag("job");
  EXPECT_EQ(plain.base, "job");
  EXPECT_FALSE(plain.shard);
  auto tagged = parse_job_tag("job/3/1");
  EXPECT_EQ(tagged.shard, 3u);
  EXPECT_EQ(tagged.duplicate, 1u);
  EXPECT_THROW(parse_job_tag("job/x"), ProtocolError);
}

TEST(TreeOrderReduce, MatchesBottomUpOracle) {
  for (size_t m : {1, 2, 3, 5, 8, 13}) {
    std::vector<std::vector<double>> local;
    for (size_t r = 0; r < m; ++r) local.push_back(random_vector(17, r + 100 * m));
    EXPECT_TRUE(bitwise_equal(tree_order_reduce(local), tree_oracle(local, ReduceOp::sum)));
  }
}

TEST(Allreduce, ThreeScalarsSum) {
  std::vector<double> got(3);
  run_thread_cluster(3, [&](uint32_t i, Collective& c) { got[i] = c.allreduce_scalar(i + 1.0); });
  for (double g : got) EXPECT_EQ(g, 6.0);
}

TEST(Allreduce, TwoVectorsSum) {
  std::vector<std::vector<double>> got(2);
  run_thread_cluster(2, [&](uint32_t i, Collective& c) {
    std::vector<double> v = i == 0 ? std::vector<double>{1, 2} : std::vector<double>{3, 4};
    c.allreduce(v);
    got[i] = v;
  });
  for (auto& g : got) EXPECT_EQ(g, (std::vector<double>{4, 6}));
}

TEST(Allreduce, ScalarOps) {
  std::vector<double> sums(4), maxes(3), mins(3);
  run_thread_cluster(4, [&](uint32_t i, Collective& c) { sums[i] = c.allreduce_scalar(1.0); });
  for (double s : sums) EXPECT_EQ(s, 4.0);
  const double vals[] = {-1, 0, 5};
  run_thread_cluster(3, [&](uint32_t i, Collective& c) {
    maxes[i] = c.allreduce_scalar(vals[i], ReduceOp::max);
    mins[i] = c.allreduce_scalar(vals[i], ReduceOp::min);
  });
  for (double v : maxes) EXPECT_EQ(v, 5.0);
  for (double v : mins) EXPECT_EQ(v, -1.0);
}

TEST(Allreduce, RandomScalarSumMatchesSerialOracle) {
  auto vals = random_vector(5, 42);
  std::vector<std::vector<double>> local;
  for (double v : vals) local.push_back({v});
  const double expect = tree_oracle(local, ReduceOp::sum)[0];
  std::vector<double> got(5);
  run_thread_cluster(5, [&](uint32_t i, Collective& c) { got[i] = c.allreduce_scalar(vals[i]); });
  for (double g : got) EXPECT_EQ(g, expect);
}

TEST(Allreduce, ChunkedVectorsMatchOracleBitwise) {
  // Small chunks force many frames and a partial last frame.
  for (uint32_t m : {1u, 2u, 4u, 7u}) {
    for (size_t len : {size_t{0}, size_t{1}, size_t{37}, size_t{5000}}) {
      std::vector<std::vector<double>> local;
      for (uint32_t r = 0; r < m; ++r) local.push_back(random_vector(len, 1000 * m + r + len));
      for (ReduceOp op : {ReduceOp::sum, ReduceOp::max, ReduceOp::min}) {
        const auto expect = tree_oracle(local, op);
        std::vector<std::vector<double>> got(m);
        test_support::ThreadClusterOptions opts;
        opts.chunk_bytes = 8 * 13;
        run_thread_cluster(
            m,
            [&](uint32_t i, Collective& c) {
              auto v = local[i];
              c.allreduce(v, op);
              got[i] = v;
            },
            opts);
        for (uint32_t r = 0; r < m; ++r) {
          EXPECT_TRUE(bitwise_equal(got[r], expect)) << "m=" << m << " len=" << len << " rank=" << r;
        }
      }
    }
  }
}

TEST(Allreduce, CloseToAnyPermutationSum) {
  const uint32_t m = 6;
  const size_t d = 2000;
  std::vector<std::vector<double>> local;
  double max_abs = 0;
  for (uint32_t r = 0; r < m; ++r) {
    local.push_back(random_vector(d, 77 + r));
    for (double x : local.back()) max_abs = std::max(max_abs, std::abs(x));
  }
  std::vector<double> result;
  run_thread_cluster(m, [&](uint32_t i, Collective& c) {
    auto v = local[i];
    c.allreduce(v);
    if (i == 0) result = v;
  });
  std::vector<size_t> perm{5, 2, 0, 4, 1, 3};
  const double bound = m * d * std::numeric_limits<double>::epsilon() * max_abs;
  for (size_t j = 0; j < d; ++j) {
    double s = 0;
    for (size_t k : perm) s += local[k][j];
    EXPECT_LE(std::abs(s - result[j]), bound);
  }
}

TEST(Allreduce, SessionIsReusable) {
  std::vector<std::vector<double>> got(5);
  run_thread_cluster(5, [&](uint32_t i, Collective& c) {
    std::vector<double> a(300, i + 1.0);
    c.allreduce(a);
    std::vector<double> b(10, a[0] * (i + 1));
    c.allreduce(b, ReduceOp::max);
    got[i] = {a[0], b[0], static_cast<double>(c.stats().vector_calls)};
  });
  for (auto& g : got) EXPECT_EQ(g, (std::vector<double>{15, 75, 2}));
}

TEST(Allreduce, StatsCountCallsAndBytes) {
  std::vector<CollectiveStats> stats(3);
  run_thread_cluster(3, [&](uint32_t i, Collective& c) {
    std::vector<double> v(100, 1.0);
    c.allreduce(v);
    c.allreduce_scalar(1.0);
    stats[i] = c.stats();
  });
  EXPECT_EQ(stats[0].vector_calls, 1u);
  EXPECT_EQ(stats[0].scalar_calls, 1u);
  // root sends the result to two children; leaves send their vector up once
  EXPECT_EQ(stats[0].bytes_sent, 2 * 101 * 8u);
  EXPECT_EQ(stats[1].bytes_sent, 101 * 8u);
}

TEST(Allreduce, LengthMismatchAbortsEveryNode) {
  std::vector<int> outcome(4, 0);  // 1 protocol error, 2 comm error
  EXPECT_ANY_THROW(run_thread_cluster(4, [&](uint32_t i, Collective& c) {
    std::vector<double> v(i == 3 ? 11 : 10, 1.0);
    try {
      c.allreduce(v);
    } catch (const ProtocolError&) {
      outcome[i] = 1;
      throw;
    } catch (const CommError&) {
      outcome[i] = 2;
      throw;
    }
  }));
  for (int o : outcome) EXPECT_NE(o, 0);
  // rank 3's parent (rank 1) sees the bad header
  EXPECT_EQ(outcome[1], 1);
}

TEST(Allreduce, PeerDisconnectSurfacesCommError) {
  std::vector<int> outcome(3, 0);
  EXPECT_ANY_THROW(run_thread_cluster(3, [&](uint32_t i, Collective& c) {
    if (i == 2) {
      // leave without taking part; the session's sockets close on return
      return;
    }
    std::vector<double> v(1000, 1.0);
    try {
      c.allreduce(v);
    } catch (const CommError&) {
      outcome[i] = 1;
      throw;
    }
  }));
  EXPECT_EQ(outcome[0], 1);
  EXPECT_EQ(outcome[1], 1);
}

TEST(Allreduce, FailedSessionStaysFailed) {
  std::atomic<int> second_failures{0};
  EXPECT_ANY_THROW(run_thread_cluster(2, [&](uint32_t i, Collective& c) {
    if (i == 1) return;
    std::vector<double> v(4, 1.0);
    EXPECT_THROW(c.allreduce(v), CommError);
    try {
      c.allreduce(v);
    } catch (const CommError&) {
      ++second_failures;
    }
    throw CommError("done");
  }));
  EXPECT_EQ(second_failures.load(), 1);
}

TEST(Coordinator, SingleWorkerIsRoot) {
  Coordinator coord({0, 1, "solo", std::chrono::milliseconds(5000)});
  auto served = std::async(std::launch::async, [&] { return coord.serve(); });
  JoinOptions o;
  o.coordinator_port = coord.port();
  o.job_id = "solo";
  auto s = TreeSession::join(o);
  auto rec = served.get();
  EXPECT_EQ(s->rank(), 0u);
  EXPECT_EQ(s->size(), 1u);
  EXPECT_FALSE(s->topology().parent);
  EXPECT_TRUE(s->topology().children.empty());
  ASSERT_EQ(rec.assignments.size(), 1u);
  std::vector<double> v{3.5};
  s->allreduce(v);
  EXPECT_EQ(v[0], 3.5);
}

TEST(Coordinator, ArrivalOrderRanksAndParentEndpoints) {
  Coordinator coord({0, 3, "three", std::chrono::milliseconds(10000)});
  auto served = std::async(std::launch::async, [&] { return coord.serve(); });
  std::vector<std::unique_ptr<TreeSession>> sessions(3);
  std::vector<std::thread> threads;
  for (int i = 0; i < 3; ++i) {
    threads.emplace_back([&, i] {
      JoinOptions o;
      o.coordinator_port = coord.port();
      o.job_id = "three";
      sessions[i] = TreeSession::join(o);
    });
  }
  for (auto& t : threads) t.join();
  auto rec = served.get();
  std::vector<uint32_t> ranks;
  for (auto& s : sessions) ranks.push_back(s->rank());
  std::sort(ranks.begin(), ranks.end());
  EXPECT_EQ(ranks, (std::vector<uint32_t>{0, 1, 2}));
  for (auto& s : sessions) {
    if (s->rank() == 0) continue;
    ASSERT_TRUE(s->topology().parent);
    EXPECT_EQ(*s->topology().parent, rec.assignments[0].data_endpoint);
  }
}

TEST(Coordinator, TimeoutAbortsConnectedWorkers) {
  Coordinator coord({0, 4, "late", std::chrono::milliseconds(700)});
  auto served = std::async(std::launch::async, [&] { return coord.serve(); });
  std::vector<std::future<bool>> workers;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 3; ++i) {
    workers.push_back(std::async(std::launch::async, [&] {
      JoinOptions o;
      o.coordinator_port = coord.port();
      o.job_id = "late";
      try {
        TreeSession::join(o);
      } catch (const SessionAborted&) {
        return true;
      }
      return false;
    }));
  }
  for (auto& w : workers) EXPECT_TRUE(w.get());
  EXPECT_THROW(served.get(), SessionAborted);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(Coordinator, RejectsWrongJobAndDuplicateShards) {
  Coordinator coord({0, 2, "job", std::chrono::milliseconds(10000)});
  auto served = std::async(std::launch::async, [&] { return coord.serve(); });
  auto join = [&](const std::string& id) {
    JoinOptions o;
    o.coordinator_port = coord.port();
    o.job_id = id;
    return TreeSession::join(o);
  };
  EXPECT_THROW(join("other/0"), ProtocolError);
  auto first = std::async(std::launch::async, [&] { return join("job/0/0"); });
  // wait until shard 0 is admitted, then a duplicate for shard 0 must bounce
  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  EXPECT_THROW(join("job/0/1"), ProtocolError);
  auto second = std::async(std::launch::async, [&] { return join("job/1/0"); });
  auto s0 = first.get();
  auto s1 = second.get();
  auto rec = served.get();
  EXPECT_EQ(s0->rank(), 0u);
  EXPECT_EQ(s1->rank(), 1u);
  EXPECT_EQ(rec.rejections.size(), 2u);
  EXPECT_EQ(rec.assignments[0].duplicate, 0u);
}

TEST(Coordinator, NodeCountMismatchRejected) {
  Coordinator coord({0, 2, "job", std::chrono::milliseconds(1500)});
  auto served = std::async(std::launch::async, [&] { return coord.serve(); });
  JoinOptions o;
  o.coordinator_port = coord.port();
  o.job_id = "job";
  o.nodes = 5;
  EXPECT_THROW(TreeSession::join(o), ProtocolError);
  EXPECT_THROW(served.get(), SessionAborted);
}
