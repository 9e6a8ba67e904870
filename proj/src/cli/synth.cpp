#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "treelearn/cli.hpp"
#include "treelearn/data/shard.hpp"
#include "treelearn/data/synthetic.hpp"

namespace treelearn {

int synth_main(int argc, const char* const* argv) {
  SyntheticConfig c;
  std::string out_path, shard_dir;
  uint32_t shards = 0, replication = 1;
  CLI::App app{"Generate synthetic sparse logistic data"};
  app.add_option("--examples", c.examples, "Number of examples")->capture_default_str();
  app.add_option("--bits", c.bits, "Feature hash bits")->check(CLI::Range(1, 31))->capture_default_str();
  app.add_option("--nonzeros", c.nonzeros, "Mean features per example besides the bias")->capture_default_str();
  app.add_option("--weight-scale", c.weight_scale, "Spread of the true weights")->capture_default_str();
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--out", out_path, "Output file")->required();
  app.add_option("--shards", shards, "Also split into this many shards next to the output");
  app.add_option("--replication", replication, "Copies of each example across shards")->capture_default_str();
  app.add_option("--shard-dir", shard_dir, "Directory for shards (default: OUT.shards)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "synth: " << e.what() << "\nrun with --help for usage\n";
    return kExitUsage;
  }
  try {
    SyntheticData d = generate_logistic(c);
    {
      std::ofstream out(out_path);
      write_dataset(out, d.data);
      if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    }
    if (shards > 0) {
      if (shard_dir.empty()) shard_dir = out_path + ".shards";
      ShardManifest m = shard_dataset(out_path, shards, shard_dir, replication);
      std::cout << "wrote " << m.shards << " shards to " << shard_dir << "\n";
    }
    std::cout << "wrote " << d.data.size() << " examples to " << out_path << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "synth: " << e.what() << "\n";
    return dynamic_cast<const std::invalid_argument*>(&e) ? kExitUsage : kExitRuntime;
  }
}

}  // namespace treelearn
