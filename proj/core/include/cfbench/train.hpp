#pragma once

#include <cstdint>
#include <vector>

#include "cfbench/dataset.hpp"
#include "cfbench/detector.hpp"

namespace cfb {

struct TrainConfig {
  int batch_size = 32;
  int epochs = 20;
  float learning_rate = 1e-4f;
  std::uint64_t seed = 1;
  float beta1 = 0.9f;
  float beta2 = 0.99f;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct EvalResult {
  double accuracy = 0.0;
  double false_positive_rate = 0.0;  // pristine classified as manipulated
  double false_negative_rate = 0.0;  // manipulated classified as pristine
  int n = 0;
};

/// Minimizes softmax cross-entropy with Adam; per-epoch shuffles from the
/// seed; the constrained first layer is re-projected after every step.
/// Returns the best-validation-accuracy snapshot (earliest epoch wins on
/// ties). Throws on divergence (NaN loss) with epoch/step diagnostics.
std::vector<EpochMetrics> train(DetectorModel& model, const Dataset& dataset,
                                const TrainConfig& cfg);

/// Argmax-of-logits decisions (index 0 wins exact ties).
EvalResult evaluate(const DetectorModel& model, const std::vector<PatchRecord>& patches);

}  // namespace cfb
