#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "treelearn/data/dataset.hpp"
#include "treelearn/model/objective.hpp"

namespace treelearn {

struct Evaluation {
  std::vector<double> margins;
  // empty when the metric is undefined on this set (e.g. a single class)
  std::optional<double> auroc, auprc, nll;
};

Evaluation evaluate(std::span<const double> w, const Dataset& test, LossKind loss);

// One margin per line in hexadecimal floating point, so files compare bitwise.
void write_predictions(std::ostream& out, std::span<const double> margins);

}  // namespace treelearn
