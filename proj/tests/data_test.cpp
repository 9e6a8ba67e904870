#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_set>

#include "treelearn/data/dataset.hpp"
#include "treelearn/data/example.hpp"
#include "treelearn/data/hashing.hpp"
#include "treelearn/data/shard.hpp"
#include "treelearn/data/synthetic.hpp"
#include "treelearn/errors.hpp"

using namespace treelearn;
namespace fs = std::filesystem;

namespace {

// Reference FNV-1a written against the published constants, kept separate
// from the library implementation.
uint32_t reference_fnv_masked(const std::string& s, int bits) {
  unsigned __int128 h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h = (h * 1099511628211ull) % (static_cast<unsigned __int128>(1) << 64);
  }
  return static_cast<uint32_t>(static_cast<uint64_t>(h) & ((1ull << bits) - 1));
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("treelearn_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST(Hashing, EmptyStringIsOffsetBasis) {
  EXPECT_EQ(hash_feature("", 24), 0xcbf29ce484222325ull & 0xFFFFFF);
}

TEST(Hashing, MatchesReferenceAndIsDeterministic) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    std::string s(rng() % 30, '\0');
    for (auto& c : s) c = static_cast<char>(rng() % 256);
    int bits = 1 + static_cast<int>(rng() % 31);
    EXPECT_EQ(hash_feature(s, bits), reference_fnv_masked(s, bits));
    EXPECT_EQ(hash_feature(s, bits), hash_feature(s, bits));
  }
}

TEST(Hashing, GoldenFileIsStable) {
  std::ifstream in(fs::path(TREELEARN_TEST_DATA_DIR) / "hash_golden.tsv");
  ASSERT_TRUE(in);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string name, bits, index;
    std::getline(ss, name, '\t');
    std::getline(ss, bits, '\t');
    std::getline(ss, index, '\t');
    EXPECT_EQ(hash_feature(name, std::stoi(bits)), std::stoul(index)) << name;
    ++rows;
  }
  EXPECT_EQ(rows, 50);
}

TEST(Hashing, RejectsBadBits) {
  EXPECT_THROW(hash_feature("a", 0), std::invalid_argument);
  EXPECT_THROW(hash_feature("a", 32), std::invalid_argument);
}

TEST(Hashing, CollisionsNearBirthdayExpectation) {
  const int bits = 18;
  const double B = std::ldexp(1.0, bits);
  const int n = 100000;
  std::unordered_set<uint32_t> seen;
  std::unordered_set<std::string> names;
  std::mt19937_64 rng(99);
  while (static_cast<int>(names.size()) < n) {
    names.insert("feat_" + std::to_string(rng()));
  }
  for (const auto& s : names) seen.insert(hash_feature(s, bits));
  const double collisions = n - static_cast<double>(seen.size());
  // E[empty bins] and Var[empty bins]; collisions = n - B + empty
  const double q1 = std::pow(1 - 1 / B, n), q2 = std::pow(1 - 2 / B, n);
  const double expect = n - B * (1 - q1);
  const double var = B * (B - 1) * q2 + B * q1 - B * B * q1 * q1;
  EXPECT_LE(std::abs(collisions - expect), 3 * std::sqrt(var))
      << "collisions " << collisions << " expected " << expect;
}

TEST(ParseExample, DefaultsAndValues) {
  auto ex = parse_example("1 | a b", 24);
  EXPECT_EQ(ex.label, 1.0);
  EXPECT_EQ(ex.importance, 1.0);
  ASSERT_EQ(ex.features.size(), 2u);
  for (auto& f : ex.features) EXPECT_EQ(f.value, 1.0);
  EXPECT_TRUE(std::is_sorted(ex.features.begin(), ex.features.end(),
                             [](auto& a, auto& b) { return a.index < b.index; }));
}

TEST(ParseExample, DuplicatesMergeBySum) {
  auto ex = parse_example("0 | x:2.5 x:0.5", 24);
  ASSERT_EQ(ex.features.size(), 1u);
  EXPECT_EQ(ex.features[0].index, hash_feature("x", 24));
  EXPECT_EQ(ex.features[0].value, 3.0);
}

TEST(ParseExample, ConjunctionTokenHashesAsOneName) {
  auto ex = parse_example("1 | publisher=finance.yahoo.com_advertiser=etrade", 24);
  ASSERT_EQ(ex.features.size(), 1u);
  EXPECT_EQ(ex.features[0].index,
            reference_fnv_masked("publisher=finance.yahoo.com_advertiser=etrade", 24));
}

TEST(ParseExample, ImportanceColumn) {
  auto ex = parse_example("0 2.5 | a", 18);
  EXPECT_EQ(ex.importance, 2.5);
  EXPECT_THROW(parse_example("0 -1 | a", 18), ParseError);
}

TEST(ParseExample, ErrorsCarryLineNumber) {
  try {
    parse_example("yes | a", 18, 7);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7u);
  }
  EXPECT_THROW(parse_example("1 | a:b", 18), ParseError);
  EXPECT_THROW(parse_example("1 a b", 18), ParseError);
}

TEST(ParseExample, TextRoundTripProperty) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    SparseExample ex;
    ex.label = static_cast<double>(rng() % 2);
    ex.importance = (rng() % 3 == 0) ? 0.25 + (rng() % 100) / 7.0 : 1.0;
    int nf = static_cast<int>(rng() % 12);
    for (int k = 0; k < nf; ++k) {
      ex.features.push_back({static_cast<uint32_t>(rng() % (1u << 18)),
                             std::ldexp(static_cast<double>(rng() % 1000) - 500, -3)});
    }
    canonicalize(ex.features);
    EXPECT_EQ(parse_example(to_text(ex), 18), ex) << to_text(ex);
  }
}

TEST(Dataset, ReadSkipsBlankLinesAndReportsLine) {
  std::istringstream in("1 | a\n\n0 | b c\n");
  auto d = read_dataset(in, 18);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d[1].indices.size(), 2u);
  std::istringstream bad("1 | a\n0 | b:zz\n");
  try {
    read_dataset(bad, 18);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Shard, SingleShardIsIdentity) {
  auto dir = temp_dir("shard1");
  std::vector<std::string> lines;
  {
    std::ofstream out(dir / "in.txt");
    for (int i = 0; i < 10; ++i) {
      lines.push_back(std::to_string(i % 2) + " | f" + std::to_string(i));
      out << lines.back() << "\n";
    }
  }
  auto m = shard_dataset(dir / "in.txt", 1, dir / "out");
  EXPECT_EQ(read_lines(m.paths[0]), lines);
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
}

TEST(Shard, RoundRobinSizes) {
  auto dir = temp_dir("shard3");
  {
    std::ofstream out(dir / "in.txt");
    for (int i = 0; i < 10; ++i) out << "1 | f" << i << "\n";
  }
  auto m = shard_dataset(dir / "in.txt", 3, dir / "out");
  EXPECT_EQ(m.counts, (std::vector<uint64_t>{4, 3, 3}));
  EXPECT_EQ(read_lines(m.paths[1]).front(), "1 | f1");
}

TEST(Shard, PreservesMultisetOfLines) {
  auto dir = temp_dir("shard7");
  std::multiset<std::string> input;
  std::mt19937 rng(1);
  {
    std::ofstream out(dir / "in.txt");
    for (int i = 0; i < 1000; ++i) {
      std::string l = std::to_string(rng() % 2) + " | t" + std::to_string(rng() % 50);
      input.insert(l);
      out << l << "\n";
    }
  }
  auto m = shard_dataset(dir / "in.txt", 7, dir / "out");
  std::multiset<std::string> output;
  for (auto& p : m.paths)
    for (auto& l : read_lines(p)) output.insert(l);
  EXPECT_EQ(input, output);
  auto [lo, hi] = std::minmax_element(m.counts.begin(), m.counts.end());
  EXPECT_LE(*hi - *lo, 1u);
}

TEST(Shard, LabelBalancePreservedOnShuffledInput) {
  auto dir = temp_dir("shardlabels");
  const int n = 20000;
  const double p = 1.0 / 3.0;
  std::mt19937 rng(8);
  std::bernoulli_distribution pos(p);
  {
    std::ofstream out(dir / "in.txt");
    for (int i = 0; i < n; ++i) out << (pos(rng) ? 1 : 0) << " | a\n";
  }
  auto m = shard_dataset(dir / "in.txt", 5, dir / "out");
  for (uint32_t k = 0; k < 5; ++k) {
    auto d = load_dataset(m.paths[k], 18);
    double positives = 0;
    for (size_t i = 0; i < d.size(); ++i) positives += d[i].label;
    double sd = std::sqrt(d.size() * p * (1 - p));
    EXPECT_LE(std::abs(positives - d.size() * p), 3 * sd);
  }
}

TEST(Shard, ReplicationWritesConsecutiveShards) {
  auto dir = temp_dir("shardrep");
  {
    std::ofstream out(dir / "in.txt");
    for (int i = 0; i < 8; ++i) out << "1 | f" << i << "\n";
  }
  auto m = shard_dataset(dir / "in.txt", 4, dir / "out", 2);
  EXPECT_EQ(m.counts, (std::vector<uint64_t>{4, 4, 4, 4}));
  EXPECT_EQ(read_lines(m.paths[1]),
            (std::vector<std::string>{"1 | f0", "1 | f1", "1 | f4", "1 | f5"}));
}

TEST(Shard, MissingInputIsIoError) {
  EXPECT_THROW(shard_dataset("/nonexistent/file.txt", 2, temp_dir("missing")), IoError);
}

TEST(Dataset, SplitRoundRobinMatchesShardFiles) {
  std::istringstream in("1 | a\n0 | b\n1 | c\n0 | d\n1 | e\n");
  auto parts = split_round_robin(read_dataset(in, 18), 2);
  EXPECT_EQ(parts[0].size(), 3u);
  EXPECT_EQ(parts[1].example(0), parse_example("0 | b", 18));
}

TEST(Synthetic, FeatureCountsVaryAroundTheMean) {
  SyntheticConfig c;
  c.examples = 5000;
  c.bits = 10;
  c.nonzeros = 6;
  auto gen = generate_logistic(c);
  ASSERT_EQ(gen.data.size(), 5000u);
  std::map<size_t, size_t> counts;
  double total = 0;
  for (size_t i = 0; i < gen.data.size(); ++i) {
    auto x = gen.data[i];
    ASSERT_EQ(x.indices.front(), 0u);
    ASSERT_TRUE(std::adjacent_find(x.indices.begin(), x.indices.end()) == x.indices.end());
    const size_t k = x.indices.size() - 1;
    ASSERT_GE(k, 1u);
    ASSERT_LE(k, 11u);
    ++counts[k];
    total += static_cast<double>(k);
  }
  EXPECT_EQ(counts.size(), 11u);
  EXPECT_NEAR(total / 5000, 6.0, 0.15);
}

TEST(Synthetic, SameSeedSameData) {
  SyntheticConfig c;
  c.examples = 50;
  std::ostringstream a, b;
  write_dataset(a, generate_logistic(c).data);
  write_dataset(b, generate_logistic(c).data);
  EXPECT_EQ(a.str(), b.str());
  c.seed = 2;
  std::ostringstream other;
  write_dataset(other, generate_logistic(c).data);
  EXPECT_NE(a.str(), other.str());
}
