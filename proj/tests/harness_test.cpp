#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "treelearn/data/synthetic.hpp"
#include "treelearn/harness/launch.hpp"
#include "treelearn/model/model_io.hpp"

using namespace treelearn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("treelearn-harness-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_synthetic(const fs::path& dir, size_t n, int bits) {
  SyntheticConfig c;
  c.examples = n;
  c.bits = bits;
  c.seed = 11;
  fs::path file = dir / "train.txt";
  std::ofstream out(file);
  write_dataset(out, generate_logistic(c).data);
  return file;
}

HarnessPlan plan_for(const fs::path& dir, uint32_t nodes) {
  HarnessPlan p;
  p.nodes = nodes;
  p.dataset = write_synthetic(dir, 2000, 10);
  p.out_dir = dir / "out";
  p.worker_binary = TREELEARN_WORKER_BINARY;
  p.timeout = std::chrono::milliseconds(60000);
  p.worker_flags = {"--bits", "10", "--lbfgs-iters", "5"};
  return p;
}

ReportRow row(double comm) {
  ReportRow r;
  r.comm_seconds = comm;
  return r;
}

}  // namespace

TEST(SlowMap, Parses) {
  auto m = parse_slow_map("0:10,3:2.5");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m[0], 10);
  EXPECT_DOUBLE_EQ(m[3], 2.5);
  EXPECT_THROW(parse_slow_map("3"), std::invalid_argument);
  EXPECT_THROW(parse_slow_map("a:2"), std::invalid_argument);
  EXPECT_THROW(parse_slow_map("1:2x"), std::invalid_argument);
}

TEST(Plan, RejectsInconsistentSettings) {
  HarnessPlan p;
  p.nodes = 2;
  EXPECT_NO_THROW(validate(p));
  p.slow = {{2, 3.0}};
  EXPECT_THROW(validate(p), std::invalid_argument);
  p.slow = {{1, 0.5}};
  EXPECT_THROW(validate(p), std::invalid_argument);
  p.slow = {};
  p.replication = 3;
  EXPECT_THROW(validate(p), std::invalid_argument);
  p.replication = 1;
  for (const char* owned : {"--coordinator", "--job-id", "--data", "--nodes", "--slow-factor", "--nodes=2"}) {
    p.worker_flags = {owned, "x"};
    EXPECT_THROW(validate(p), std::invalid_argument) << owned;
  }
}

TEST(Stall, MeasuredAgainstFastestRank) {
  RunReport a, b;
  a.rows = {row(1.0), row(3.0)};
  b.rows = {row(0.5), row(4.5)};
  auto s = stall_seconds({a, b});
  EXPECT_DOUBLE_EQ(s[0][0], 0.5);
  EXPECT_DOUBLE_EQ(s[1][0], 0.0);
  EXPECT_DOUBLE_EQ(s[0][1], 0.0);
  EXPECT_DOUBLE_EQ(s[1][1], 2.0);
}

TEST(Launch, ThreeNodesProduceMergedReportAndModel) {
  fs::path dir = scratch("three");
  HarnessPlan p = plan_for(dir, 3);
  p.worker_flags.insert(p.worker_flags.end(), {"--model", (dir / "model.bin").string(), "--report", "ignored.csv"});
  LaunchResult r = launch(p);
  ASSERT_TRUE(r.ok) << r.failure;
  EXPECT_FALSE(fs::exists("ignored.csv"));
  for (const auto& w : r.workers) {
    EXPECT_TRUE(w.admitted);
    EXPECT_EQ(w.exit_code.value_or(-1), 0);
  }
  EXPECT_TRUE(fs::exists(p.out_dir / "report.csv"));
  EXPECT_TRUE(fs::exists(p.out_dir / "survivors.txt"));
  SavedModel m = load_model(dir / "model.bin");
  EXPECT_EQ(m.weights.size(), 1u << 10);
  std::ifstream merged(p.out_dir / "report.csv");
  std::string header;
  std::getline(merged, header);
  EXPECT_NE(header.find("stall_seconds,shard,duplicate"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Launch, DuplicatesLeaveOneSurvivorPerShard) {
  fs::path dir = scratch("dups");
  HarnessPlan p = plan_for(dir, 2);
  p.duplicates = 2;
  p.slow = {{0, 200.0}};
  LaunchResult r = launch(p);
  ASSERT_TRUE(r.ok) << r.failure;
  int admitted[2] = {0, 0};
  for (const auto& w : r.workers) admitted[w.shard] += w.admitted;
  EXPECT_EQ(admitted[0], 1);
  EXPECT_EQ(admitted[1], 1);
  for (const auto& w : r.workers) {
    if (w.shard == 0 && w.admitted) EXPECT_EQ(w.duplicate, 1u) << "the slowed copy should lose";
  }
  fs::remove_all(dir);
}

TEST(Launch, DeadShardFailsWithItsId) {
  fs::path dir = scratch("dead");
  HarnessPlan p = plan_for(dir, 2);
  p.worker_flags = {"--strategy", "bogus"};
  LaunchResult r = launch(p);
  EXPECT_FALSE(r.ok);
  EXPECT_NE(r.failure.find("shard"), std::string::npos) << r.failure;
  fs::remove_all(dir);
}
