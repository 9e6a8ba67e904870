#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "treelearn/cli.hpp"
#include "treelearn/errors.hpp"
#include "treelearn/metrics/evaluate.hpp"
#include "treelearn/model/model_io.hpp"

namespace treelearn {

int eval_main(int argc, const char* const* argv) {
  std::string model_path, test_path, metrics = "auroc,auprc,nll", predictions;
  CLI::App app{"Score a held-out set with a saved model"};
  app.add_option("--model", model_path, "Model file")->required();
  app.add_option("--test", test_path, "Test examples")->required();
  app.add_option("--metrics", metrics, "Comma-separated subset of auroc,auprc,nll")->capture_default_str();
  app.add_option("--predictions", predictions, "Also write margins here");
  std::vector<std::string> wanted;
  try {
    app.parse(argc, argv);
    std::stringstream s(metrics);
    for (std::string m; std::getline(s, m, ',');) {
      if (m != "auroc" && m != "auprc" && m != "nll") throw CLI::ValidationError("--metrics", "unknown metric " + m);
      wanted.push_back(m);
    }
    if (wanted.empty()) throw CLI::ValidationError("--metrics", "no metrics requested");
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "eval: " << e.what() << "\nrun with --help for usage\n";
    return kExitUsage;
  }
  try {
    SavedModel model = load_model(model_path);
    Dataset test = load_dataset(test_path, model.bits);
    Evaluation e = evaluate(model.weights, test, model.loss);
    if (!predictions.empty()) {
      std::ofstream out(predictions);
      write_predictions(out, e.margins);
      if (!out) throw IoError("cannot write '" + predictions + "'");
    }
    std::ostringstream header, row;
    row.precision(17);
    for (size_t i = 0; i < wanted.size(); ++i) {
      const std::string& m = wanted[i];
      const auto& v = m == "auroc" ? e.auroc : m == "auprc" ? e.auprc : e.nll;
      if (!v) throw MetricUndefined(m + " is undefined on this test set");
      header << (i ? "," : "") << m;
      row << (i ? "," : "") << *v;
    }
    std::cout << header.str() << "\n" << row.str() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "eval: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace treelearn
