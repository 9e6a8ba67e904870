#pragma once

#include <filesystem>

#include "treelearn/model/objective.hpp"

namespace treelearn {

// On-disk model: magic "TLMODEL1", u32 bits, u64 dimension, u8 loss,
// f64 lambda, then `dimension` f64 weights. Little-endian throughout.
struct SavedModel {
  int bits = 0;
  LossKind loss = LossKind::logistic;
  double lambda = 0.0;
  DenseVector weights;
};

void save_model(const std::filesystem::path& path, const SavedModel& model);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace treelearn
