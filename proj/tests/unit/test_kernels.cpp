#include <cmath>

#include <gtest/gtest.h>

#include "../oracles.hpp"
#include "s2r/nn/kernels.hpp"

using namespace s2r;
using namespace s2r::nn;

namespace {

BatchTensor random_tensor(std::size_t b, std::size_t c, std::size_t t, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  BatchTensor x(b, c, t);
  for (auto& v : x.data()) v = g(rng);
  return x;
}

Conv1dParams random_conv(std::size_t in, std::size_t out, std::size_t k, bool bias, Padding pad, Rng& rng) {
  std::normal_distribution<double> g(0.0, 0.5);
  Conv1dParams p;
  p.in_channels = in;
  p.out_channels = out;
  p.kernel = k;
  p.padding = pad;
  p.weight.resize(in * out * k);
  for (auto& w : p.weight) w = g(rng);
  if (bias) {
    p.bias.resize(out);
    for (auto& v : p.bias) v = g(rng);
  }
  return p;
}

// Direct-sum convolution, written from the definition.
BatchTensor naive_conv(const BatchTensor& x, const Conv1dParams& p) {
  const long T = static_cast<long>(x.time()), pl = static_cast<long>((p.kernel - 1) / 2);
  BatchTensor y(x.batch(), p.out_channels, x.time());
  for (std::size_t b = 0; b < x.batch(); ++b)
    for (std::size_t o = 0; o < p.out_channels; ++o)
      for (long t = 0; t < T; ++t) {
        double s = p.bias.empty() ? 0.0 : p.bias[o];
        for (std::size_t i = 0; i < p.in_channels; ++i)
          for (long k = 0; k < static_cast<long>(p.kernel); ++k) {
            long src = t + k - pl;
            if (src < 0 || src >= T) {
              if (p.padding == Padding::Zero) continue;
              src = ((src % T) + T) % T;
            }
            s += p.weight[(o * p.in_channels + i) * p.kernel + k] * x.at(b, i, src);
          }
        y.at(b, o, t) = s;
      }
  return y;
}

double dot(const BatchTensor& a, const BatchTensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

double dot(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

constexpr double kStep = 1e-4;
constexpr double kTol = 1e-4;

}  // namespace

TEST(Conv1d, IdentityKernel) {
  Rng rng(1);
  const auto x = random_tensor(2, 1, 9, rng);
  Conv1dParams p;
  p.in_channels = p.out_channels = 1;
  p.weight = {1.0};
  const auto y = conv1d_forward(x, p, nullptr);
  EXPECT_EQ(y.data(), x.data());
}

TEST(Conv1d, ZeroWeightsGiveBias) {
  Rng rng(1);
  const auto x = random_tensor(2, 3, 9, rng);
  auto p = random_conv(3, 2, 5, true, Padding::Zero, rng);
  std::fill(p.weight.begin(), p.weight.end(), 0.0);
  const auto y = conv1d_forward(x, p, nullptr);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t o = 0; o < 2; ++o)
      for (std::size_t t = 0; t < 9; ++t) EXPECT_EQ(y.at(b, o, t), p.bias[o]);
}

TEST(Conv1d, AveragingKernel) {
  BatchTensor x(1, 1, 3);
  x.at(0, 0, 1) = 3.0;
  Conv1dParams p;
  p.in_channels = p.out_channels = 1;
  p.kernel = 3;
  p.weight = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto y = conv1d_forward(x, p, nullptr);
  EXPECT_DOUBLE_EQ(y.at(0, 0, 1), 1.0);
  EXPECT_EQ(y.time(), 3u);
}

TEST(Conv1d, MatchesDirectSum) {
  Rng rng(2);
  for (auto pad : {Padding::Zero, Padding::Circular})
    for (std::size_t k : {1u, 2u, 3u, 10u, 20u, 40u}) {
      const auto x = random_tensor(3, 4, 25, rng);
      const auto p = random_conv(4, 5, k, k % 2 == 0, pad, rng);
      const auto y = conv1d_forward(x, p, nullptr), ref = naive_conv(x, p);
      for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y.data()[i], ref.data()[i], 1e-12) << "k=" << k;
    }
}

TEST(Conv1d, ShapeMismatch) {
  Rng rng(2);
  const auto x = random_tensor(1, 3, 5, rng);
  const auto p = random_conv(4, 2, 3, false, Padding::Zero, rng);
  EXPECT_THROW(conv1d_forward(x, p, nullptr), ValidationError);
}

TEST(Conv1d, BackwardZeroGrad) {
  Rng rng(3);
  const auto x = random_tensor(2, 3, 8, rng);
  const auto p = random_conv(3, 2, 3, true, Padding::Zero, rng);
  Conv1dContext ctx;
  const auto y = conv1d_forward(x, p, &ctx);
  const auto g = conv1d_backward(BatchTensor(2, 2, 8), ctx, p);
  for (double v : g.grad_x.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.grad_weight) EXPECT_EQ(v, 0.0);
  for (double v : g.grad_bias) EXPECT_EQ(v, 0.0);
}

TEST(Conv1d, BackwardScalarChainRule) {
  BatchTensor x(1, 1, 1, 2.5);
  Conv1dParams p;
  p.in_channels = p.out_channels = 1;
  p.weight = {0.7};
  Conv1dContext ctx;
  conv1d_forward(x, p, &ctx);
  const auto g = conv1d_backward(BatchTensor(1, 1, 1, 1.5), ctx, p);
  EXPECT_DOUBLE_EQ(g.grad_weight[0], 2.5 * 1.5);
  EXPECT_DOUBLE_EQ(g.grad_x.data()[0], 0.7 * 1.5);
}

TEST(Conv1d, BackwardWithoutContextIsContractError) {
  Rng rng(3);
  const auto p = random_conv(1, 1, 3, false, Padding::Zero, rng);
  EXPECT_THROW(conv1d_backward(BatchTensor(1, 1, 4), Conv1dContext{}, p), ContractError);
}

TEST(Conv1d, BackwardMatchesFiniteDifferences) {
  Rng rng(4);
  for (auto pad : {Padding::Zero, Padding::Circular})
    for (std::size_t k : {1u, 4u, 5u}) {
      auto x = random_tensor(2, 3, 7, rng);
      auto p = random_conv(3, 2, k, true, pad, rng);
      const auto w_out = random_tensor(2, 2, 7, rng);
      auto loss = [&] { return dot(conv1d_forward(x, p, nullptr), w_out); };
      Conv1dContext ctx;
      conv1d_forward(x, p, &ctx);
      const auto g = conv1d_backward(w_out, ctx, p);
      for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_LT(oracle::relative_error(g.grad_x.data()[i], oracle::central_difference(loss, x.data(), i, kStep)),
                  kTol);
      for (std::size_t i = 0; i < p.weight.size(); ++i)
        EXPECT_LT(oracle::relative_error(g.grad_weight[i], oracle::central_difference(loss, p.weight, i, kStep)),
                  kTol);
      for (std::size_t i = 0; i < p.bias.size(); ++i)
        EXPECT_LT(oracle::relative_error(g.grad_bias[i], oracle::central_difference(loss, p.bias, i, kStep)), kTol);
    }
}

TEST(BatchNorm, TrainingNormalisesAndUpdatesRunningStats) {
  Rng rng(5);
  auto x = random_tensor(4, 3, 6, rng);
  for (auto& v : x.data()) v = 2.0 + 3.0 * v;
  auto p = BatchNormParams::make(3);
  const auto y = batchnorm_forward(x, p, true, nullptr);
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0, s = 0;
    for (double v : y.channel(c)) m += v;
    m /= 24;
    for (double v : y.channel(c)) s += (v - m) * (v - m);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(s / 24, 1.0, 1e-4);
    double xm = 0;
    for (double v : x.channel(c)) xm += v;
    EXPECT_NEAR(p.running_mean[c], 0.1 * xm / 24, 1e-12);
  }
}

TEST(BatchNorm, EvalBeforeTrainingUsesInitialStats) {
  Rng rng(5);
  const auto x = random_tensor(2, 3, 4, rng);
  auto p = BatchNormParams::make(3);
  const auto y = batchnorm_forward(x, p, false, nullptr);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.data()[i], x.data()[i] / std::sqrt(1.0 + 1e-5), 1e-12);
}

TEST(BatchNorm, BackwardMatchesFiniteDifferences) {
  Rng rng(6);
  auto x = random_tensor(3, 2, 5, rng);
  auto p = BatchNormParams::make(2);
  p.gamma = {1.3, -0.4};
  p.beta = {0.2, 0.5};
  const auto w_out = random_tensor(3, 2, 5, rng);
  auto loss = [&] { return dot(batchnorm_forward(x, p, true, nullptr, false), w_out); };
  BatchNormContext ctx;
  batchnorm_forward(x, p, true, &ctx, false);
  const auto g = batchnorm_backward(w_out, ctx, p);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_LT(oracle::relative_error(g.grad_x.data()[i], oracle::central_difference(loss, x.data(), i, kStep), 1e-6),
              kTol);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_LT(oracle::relative_error(g.grad_gamma[c], oracle::central_difference(loss, p.gamma, c, kStep)), kTol);
    EXPECT_LT(oracle::relative_error(g.grad_beta[c], oracle::central_difference(loss, p.beta, c, kStep)), kTol);
  }
}

TEST(Relu, NegativeInputs) {
  BatchTensor x(1, 2, 3, -1.0);
  const auto y = relu_forward(x);
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
  const auto g = relu_backward(BatchTensor(1, 2, 3, 1.0), y);
  for (double v : g.data()) EXPECT_EQ(v, 0.0);
}

TEST(MaxPool, ForwardAndRouting) {
  BatchTensor x(1, 1, 5);
  const double vals[] = {1, 5, 2, 0, 3};
  for (int t = 0; t < 5; ++t) x.at(0, 0, t) = vals[t];
  MaxPoolContext ctx;
  const auto y = maxpool3_forward(x, Padding::Zero, &ctx);
  const double expected[] = {5, 5, 5, 3, 3};
  for (int t = 0; t < 5; ++t) EXPECT_EQ(y.at(0, 0, t), expected[t]);
  const auto g = maxpool3_backward(BatchTensor(1, 1, 5, 1.0), ctx);
  const double routed[] = {0, 3, 0, 0, 2};
  for (int t = 0; t < 5; ++t) EXPECT_EQ(g.at(0, 0, t), routed[t]);
}

TEST(MaxPool, BackwardMatchesFiniteDifferences) {
  Rng rng(7);
  auto x = random_tensor(2, 3, 9, rng);
  const auto w_out = random_tensor(2, 3, 9, rng);
  for (auto pad : {Padding::Zero, Padding::Circular}) {
    auto loss = [&] { return dot(maxpool3_forward(x, pad, nullptr), w_out); };
    MaxPoolContext ctx;
    maxpool3_forward(x, pad, &ctx);
    const auto g = maxpool3_backward(w_out, ctx);
    for (std::size_t i = 0; i < x.size(); ++i)
      EXPECT_LT(oracle::relative_error(g.data()[i], oracle::central_difference(loss, x.data(), i, kStep), 1e-6), kTol);
  }
}

TEST(Gap, ConstantChannel) {
  BatchTensor x(2, 3, 7, 0.0);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t t = 0; t < 7; ++t) x.at(b, 1, t) = 0.25;
  const auto m = gap_forward(x);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(m(1, 1), 0.25);
  EXPECT_DOUBLE_EQ(m(1, 0), 0.0);
  const auto g = gap_backward(Matrix(2, 3, 7.0), 7);
  for (double v : g.data()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Linear, BackwardMatchesFiniteDifferences) {
  Rng rng(8);
  std::normal_distribution<double> n(0, 1);
  LinearParams p{4, 3, std::vector<double>(12), std::vector<double>(3)};
  for (auto& w : p.weight) w = n(rng);
  for (auto& b : p.bias) b = n(rng);
  Matrix x(2, 4), w_out(2, 3);
  for (auto& v : x.data) v = n(rng);
  for (auto& v : w_out.data) v = n(rng);
  auto loss = [&] { return dot(linear_forward(x, p), w_out); };
  const auto g = linear_backward(w_out, x, p);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    EXPECT_LT(oracle::relative_error(g.grad_x.data[i], oracle::central_difference(loss, x.data, i, kStep)), kTol);
  for (std::size_t i = 0; i < p.weight.size(); ++i)
    EXPECT_LT(oracle::relative_error(g.grad_weight[i], oracle::central_difference(loss, p.weight, i, kStep)), kTol);
  for (std::size_t i = 0; i < p.bias.size(); ++i)
    EXPECT_LT(oracle::relative_error(g.grad_bias[i], oracle::central_difference(loss, p.bias, i, kStep)), kTol);
}

TEST(SoftmaxCE, UniformLogits) {
  const Matrix logits(1, 3, 0.0);
  for (std::size_t label = 0; label < 3; ++label) {
    const std::size_t y[] = {label};
    EXPECT_NEAR(softmax_ce_forward(logits, y).loss, std::log(3.0), 1e-12);
  }
}

TEST(SoftmaxCE, ValidDistributionsForExtremeLogits) {
  Matrix logits(3, 3);
  logits.data = {1000, -1000, 0, -745, 700, 3, 1e-300, 0, -1e-300};
  const auto p = softmax(logits);
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_TRUE(std::isfinite(p(r, c)));
      EXPECT_GE(p(r, c), 0.0);
      s += p(r, c);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  const std::size_t y[] = {1, 0, 2};
  EXPECT_TRUE(std::isfinite(softmax_ce_forward(logits, y).loss));
}

TEST(SoftmaxCE, BackwardMatchesFiniteDifferences) {
  Rng rng(9);
  std::normal_distribution<double> n(0, 2);
  Matrix logits(4, 3);
  for (auto& v : logits.data) v = n(rng);
  const std::size_t y[] = {0, 2, 1, 2};
  const auto fwd = softmax_ce_forward(logits, y);
  const auto g = softmax_ce_backward(fwd, y);
  auto loss = [&] { return softmax_ce_forward(logits, y).loss; };
  for (std::size_t i = 0; i < logits.data.size(); ++i)
    EXPECT_LT(oracle::relative_error(g.data[i], oracle::central_difference(loss, logits.data, i, kStep)), kTol);
}

TEST(SoftmaxCE, LabelOutOfRange) {
  const Matrix logits(1, 3, 0.0);
  const std::size_t y[] = {3};
  EXPECT_THROW(softmax_ce_forward(logits, y), ValidationError);
}
