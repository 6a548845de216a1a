#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "s2r/nn/inception.hpp"

namespace s2r::nn {

struct GradCheckOptions {
  std::size_t coordinates = 200;
  double step = 1e-6;
  double tolerance = 1e-4;
  // Gradients smaller than this are compared on an absolute scale.
  double denominator_floor = 1e-6;
  std::uint64_t seed = 0;
  // Test hook applied to the analytic gradients before comparison.
  std::function<void(InceptionTimeModel&)> tamper;
};

struct GradCheckEntry {
  std::string parameter;
  std::size_t index;
  double analytic;
  double numeric;
  double rel_error;
};

struct GradCheckReport {
  std::size_t coordinates = 0;
  std::size_t parameters = 0;
  double max_rel_error = 0.0;
  double loss = 0.0;
  bool finite = true;
  bool passed = false;
  std::vector<GradCheckEntry> worst;  // up to 5 largest errors
};

// Compares the analytic gradient of the mean cross-entropy (training-mode
// forward) with central finite differences on a random subset of trainable
// coordinates. Coordinates are sampled uniformly over all trainable scalars
// of non-frozen blocks.
GradCheckReport grad_check(InceptionTimeModel& model, const BatchTensor& batch,
                           const std::vector<std::size_t>& labels, const GradCheckOptions& options);

// Reduced architecture used for gradient verification (< 1e4 parameters).
ModelConfig reduced_config(std::size_t depth = 2);

}  // namespace s2r::nn
