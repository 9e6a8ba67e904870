#include <CLI11.hpp>

#include <iostream>

#include "treelearn/cli.hpp"
#include "treelearn/metrics/metrics.hpp"

namespace treelearn {

int commcost_main(int argc, const char* const* argv) {
  std::string algo;
  CostInputs in;
  CLI::App app{"Per-node communication cost with unit constants"};
  app.add_option("--algo", algo,
                 "hybrid, bundle, online, overcomplete, minibatch-dense, minibatch-sparse or parallel-online")
      ->required();
  app.add_option("--m", in.m, "Nodes");
  app.add_option("--n", in.n, "Examples");
  app.add_option("--s", in.s, "Nonzeros per example");
  app.add_option("--d", in.d, "Dimensions");
  app.add_option("--T", in.T, "Passes");
  app.add_option("--b", in.b, "Minibatch size");
  app.add_option("--rep", in.rep, "Replication factor");
  try {
    app.parse(argc, argv);
    CostEstimate c = comm_cost(parse_cost_family(algo), in);
    std::cout.precision(17);
    std::cout << c.formula << " = " << c.value << "\n";
    return kExitOk;
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "commcost: " << e.what() << "\nrun with --help for usage\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "commcost: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace treelearn
