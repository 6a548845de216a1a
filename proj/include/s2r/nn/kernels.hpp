#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "s2r/nn/tensor.hpp"
#include "s2r/types.hpp"

namespace s2r::nn {

enum class Padding { Zero, Circular };

// Stride-1 "same" convolution. Weight layout [out][in][kernel]; an empty bias
// means the layer has none. Even kernels pad (k-1)/2 on the left and the
// remainder on the right.
struct Conv1dParams {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  Padding padding = Padding::Zero;
  std::vector<double> weight;
  std::vector<double> bias;

  void validate() const;
  std::size_t pad_left() const { return (kernel - 1) / 2; }
};

struct Conv1dContext {
  bool valid = false;
  std::size_t batch = 0, time = 0;
  BatchTensor input;            // kept for 1x1 kernels
  std::vector<double> columns;  // im2col matrix [(in*kernel) x (batch*time)] for k > 1
};

struct Conv1dGrads {
  BatchTensor grad_x;
  std::vector<double> grad_weight;
  std::vector<double> grad_bias;
};

// `ctx` may be null for inference-only calls.
BatchTensor conv1d_forward(const BatchTensor& x, const Conv1dParams& p, Conv1dContext* ctx);
// Throws ContractError when `ctx` does not hold a forward pass. Skips the input
// gradient when `need_grad_x` is false.
Conv1dGrads conv1d_backward(const BatchTensor& grad_out, const Conv1dContext& ctx, const Conv1dParams& p,
                            bool need_grad_x = true);

struct BatchNormParams {
  std::size_t channels = 0;
  std::vector<double> gamma, beta;
  std::vector<double> running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  static BatchNormParams make(std::size_t channels);
};

struct BatchNormContext {
  bool valid = false;
  bool training = false;
  BatchTensor xhat;
  std::vector<double> inv_std;
};

struct BatchNormGrads {
  BatchTensor grad_x;
  std::vector<double> grad_gamma, grad_beta;
};

// Training mode normalises with batch statistics over (batch x time) and
// updates running statistics when `update_running` is set; eval mode uses
// the running statistics.
BatchTensor batchnorm_forward(const BatchTensor& x, BatchNormParams& p, bool training,
                              BatchNormContext* ctx, bool update_running = true);
BatchNormGrads batchnorm_backward(const BatchTensor& grad_out, const BatchNormContext& ctx,
                                  const BatchNormParams& p);

BatchTensor relu_forward(const BatchTensor& x);
// Gradient given the forward *output* (y > 0 <=> x > 0).
BatchTensor relu_backward(const BatchTensor& grad_out, const BatchTensor& y);

struct MaxPoolContext {
  bool valid = false;
  std::vector<std::uint32_t> argmax;  // source time index per output element
  std::size_t batch = 0, channels = 0, time = 0;
};

// Width-3, stride-1 max pooling. Out-of-range neighbours are ignored, or wrap
// around under circular padding.
BatchTensor maxpool3_forward(const BatchTensor& x, Padding padding, MaxPoolContext* ctx);
BatchTensor maxpool3_backward(const BatchTensor& grad_out, const MaxPoolContext& ctx);

// Global average over time: [B x C x T] -> [B x C].
Matrix gap_forward(const BatchTensor& x);
BatchTensor gap_backward(const Matrix& grad_out, std::size_t time);

struct LinearParams {
  std::size_t in = 0, out = 0;
  std::vector<double> weight;  // [out][in]
  std::vector<double> bias;    // [out]
};

Matrix linear_forward(const Matrix& x, const LinearParams& p);
struct LinearGrads {
  Matrix grad_x;
  std::vector<double> grad_weight, grad_bias;
};
LinearGrads linear_backward(const Matrix& grad_out, const Matrix& x, const LinearParams& p);

Matrix softmax(const Matrix& logits);

struct SoftmaxCE {
  double loss = 0.0;  // mean over the batch
  Matrix probs;
};
SoftmaxCE softmax_ce_forward(const Matrix& logits, std::span<const std::size_t> labels);
// d(mean loss)/d(logits) = (probs - onehot) / batch.
Matrix softmax_ce_backward(const SoftmaxCE& fwd, std::span<const std::size_t> labels);

}  // namespace s2r::nn
