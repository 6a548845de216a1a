#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace s2r::nn {

// [batch x channels x time] activations. Storage is channel-major
// ([C][B][T]) so that each channel's batch*time values are contiguous, which
// lets convolutions run as one GEMM over the whole batch and keeps
// per-channel normalisation statistics a single contiguous reduction.
class BatchTensor {
 public:
  BatchTensor() = default;
  BatchTensor(std::size_t batch, std::size_t channels, std::size_t time, double fill = 0.0)
      : b_(batch), c_(channels), t_(time), data_(batch * channels * time, fill) {}

  std::size_t batch() const { return b_; }
  std::size_t channels() const { return c_; }
  std::size_t time() const { return t_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t b, std::size_t c, std::size_t t) { return data_[(c * b_ + b) * t_ + t]; }
  double at(std::size_t b, std::size_t c, std::size_t t) const { return data_[(c * b_ + b) * t_ + t]; }

  // The batch*time block of channel c.
  std::span<double> channel(std::size_t c) { return {data_.data() + c * b_ * t_, b_ * t_}; }
  std::span<const double> channel(std::size_t c) const { return {data_.data() + c * b_ * t_, b_ * t_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const BatchTensor& o) const { return b_ == o.b_ && c_ == o.c_ && t_ == o.t_; }

 private:
  std::size_t b_ = 0, c_ = 0, t_ = 0;
  std::vector<double> data_;
};

// Row-major dense matrix, used for [batch x features] head activations.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Concatenates along the channel axis; all parts must share batch and time.
BatchTensor concat_channels(std::span<const BatchTensor* const> parts);
// Inverse of concat_channels: splits `t` into blocks of the given widths.
std::vector<BatchTensor> split_channels(const BatchTensor& t, std::span<const std::size_t> widths);

bool all_finite(const BatchTensor& t);

}  // namespace s2r::nn
