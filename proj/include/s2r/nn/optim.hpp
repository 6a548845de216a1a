#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2r/nn/inception.hpp"

namespace s2r::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// First and second moment estimates, one slot per parameter tensor in the
// order returned by InceptionTimeModel::parameters().
struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::int64_t step = 0;
};

// Bias-corrected Adam step over raw tensors. `frozen[i]` leaves tensor i (and
// its moments) untouched.
void adam_step(std::vector<std::vector<double>*>& params, const std::vector<const std::vector<double>*>& grads,
               const std::vector<bool>& frozen, AdamState& state, const AdamConfig& cfg);

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  // Updates every trainable, non-frozen parameter of `model` from its
  // current gradients.
  void step(InceptionTimeModel& model);

  const AdamState& state() const { return state_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  AdamState state_;
};

}  // namespace s2r::nn
