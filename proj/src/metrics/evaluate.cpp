#include "treelearn/metrics/evaluate.hpp"

#include <cstdio>
#include <ostream>

#include "treelearn/errors.hpp"
#include "treelearn/metrics/metrics.hpp"

namespace treelearn {

Evaluation evaluate(std::span<const double> w, const Dataset& test, LossKind loss) {
  check_dimension(test, w.size());
  Evaluation e;
  std::vector<Scored> scores, probs;
  for (size_t i = 0; i < test.size(); ++i) {
    const ExampleView x = test[i];
    Prediction p = predict(w, x, loss);
    e.margins.push_back(p.margin);
    scores.push_back({p.margin, x.label});
    if (loss == LossKind::logistic) probs.push_back({p.probability, x.label});
  }
  try {
    e.auroc = auroc(scores);
  } catch (const MetricUndefined&) {
  }
  try {
    e.auprc = auprc(scores);
  } catch (const MetricUndefined&) {
  }
  if (!probs.empty()) e.nll = nll(probs);
  return e;
}

void write_predictions(std::ostream& out, std::span<const double> margins) {
  char buf[64];
  for (double m : margins) {
    std::snprintf(buf, sizeof buf, "%a\n", m);
    out << buf;
  }
}

}  // namespace treelearn
