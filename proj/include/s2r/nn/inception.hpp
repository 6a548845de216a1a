#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "s2r/nn/kernels.hpp"
#include "s2r/nn/tensor.hpp"

namespace s2r::nn {

struct ModelConfig {
  std::size_t input_channels = 14;
  std::size_t classes = 3;
  std::size_t depth = 6;
  std::size_t bottleneck = 32;
  std::size_t filters = 32;  // per branch; the block output is 4 * filters wide
  std::vector<std::size_t> kernels = {10, 20, 40};
  bool use_residual = true;
  std::size_t residual_interval = 3;
  Padding padding = Padding::Zero;

  void validate() const;
  std::size_t block_width() const { return (kernels.size() + 1) * filters; }

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// A view of one parameter tensor, used by the optimiser, gradient checker and
// checkpoint writer. `block` is the inception block index, or -1 for the head.
// Buffers (batch-norm running statistics) are state, not trainable.
struct ParamRef {
  std::string name;
  std::vector<double>* value;
  std::vector<double>* grad;  // null for buffers
  int block;
  bool trainable;
};

class Conv1dLayer {
 public:
  Conv1dLayer() = default;
  Conv1dLayer(std::size_t in, std::size_t out, std::size_t kernel, bool bias, Padding padding);

  BatchTensor forward(const BatchTensor& x, bool keep_context);
  BatchTensor backward(const BatchTensor& grad_out, bool need_grad_x = true);

  Conv1dParams params;
  std::vector<double> grad_weight, grad_bias;

 private:
  Conv1dContext ctx_;
};

class BatchNormLayer {
 public:
  BatchNormLayer() = default;
  explicit BatchNormLayer(std::size_t channels)
      : params(BatchNormParams::make(channels)), grad_gamma(channels, 0.0), grad_beta(channels, 0.0) {}

  BatchTensor forward(const BatchTensor& x, bool training, bool keep_context);
  BatchTensor backward(const BatchTensor& grad_out);

  BatchNormParams params;
  std::vector<double> grad_gamma, grad_beta;
  bool update_running = true;

 private:
  BatchNormContext ctx_;
};

// bottleneck -> parallel convolutions, plus maxpool -> 1x1 branch;
// concatenated, batch-normalised and rectified.
class InceptionBlock {
 public:
  InceptionBlock() = default;
  InceptionBlock(std::size_t in_channels, const ModelConfig& cfg);

  // `training` selects batch statistics; frozen blocks always run in eval
  // mode so their running statistics stay bit-stable.
  BatchTensor forward(const BatchTensor& x, bool training, bool keep_context);
  BatchTensor backward(const BatchTensor& grad_out, bool need_grad_x);

  void collect(std::vector<ParamRef>& out, int block, const std::string& prefix);

  bool has_bottleneck = false;
  Conv1dLayer bottleneck;
  std::vector<Conv1dLayer> branches;
  Conv1dLayer pool_conv;
  BatchNormLayer norm;
  Padding padding = Padding::Zero;

 private:
  MaxPoolContext pool_ctx_;
  BatchTensor out_;  // post-ReLU output, for the ReLU gradient
};

class Shortcut {
 public:
  Shortcut() = default;
  Shortcut(std::size_t in_channels, std::size_t out_channels, Padding padding);

  BatchTensor forward(const BatchTensor& x, bool training, bool keep_context);
  BatchTensor backward(const BatchTensor& grad_out, bool need_grad_x);
  void collect(std::vector<ParamRef>& out, int block, const std::string& prefix);

  Conv1dLayer conv;
  BatchNormLayer norm;
};

struct ForwardResult {
  Matrix logits;
  Matrix probs;
};

// InceptionTime classifier: `depth` inception blocks with a residual shortcut
// closing every `residual_interval` blocks, global average pooling and a
// linear softmax head.
class InceptionTimeModel {
 public:
  InceptionTimeModel() = default;
  InceptionTimeModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }

  // Input [B x input_channels x T] with T >= 1. With `training`, batch norm
  // uses batch statistics in non-frozen blocks and the pass is recorded for
  // backward().
  ForwardResult forward(const BatchTensor& x, bool training);

  // Mean softmax cross-entropy for the last training forward pass; fills
  // parameter gradients (overwriting previous values).
  double backward(const ForwardResult& fwd, std::span<const std::size_t> labels);

  // Convenience: training forward + backward, returns loss.
  double loss_and_gradients(const BatchTensor& x, std::span<const std::size_t> labels);
  // Eval-free loss for a training-mode forward (no running-stat update).
  double loss_only(const BatchTensor& x, std::span<const std::size_t> labels, bool training);

  // Freezes blocks [0, n). The head is never frozen.
  void set_freeze(std::size_t first_n_blocks);
  std::size_t frozen_blocks() const { return frozen_; }
  bool block_frozen(int block) const { return block >= 0 && static_cast<std::size_t>(block) < frozen_; }

  std::vector<ParamRef> parameters();
  std::size_t trainable_parameter_count();
  void zero_grad();

  // Training history (per-epoch mean loss), stored with checkpoints.
  std::vector<double> history;
  int epochs_trained = 0;

 private:
  bool shortcut_after(std::size_t block) const;

  ModelConfig cfg_;
  std::uint64_t seed_ = 0;
  std::vector<InceptionBlock> blocks_;
  std::vector<Shortcut> shortcuts_;  // indexed by block; empty entries are unused
  std::vector<bool> has_shortcut_;
  LinearParams head_;
  std::vector<double> grad_head_w_, grad_head_b_;
  std::size_t frozen_ = 0;
  bool stats_update_ = true;

  // saved forward state
  bool recorded_ = false;
  std::vector<BatchTensor> sum_outputs_;   // post-ReLU residual sums
  Matrix pooled_;
  std::size_t time_ = 0;
};

}  // namespace s2r::nn
