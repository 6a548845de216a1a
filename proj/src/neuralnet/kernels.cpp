#include "s2r/nn/kernels.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace s2r::nn {

BatchTensor concat_channels(std::span<const BatchTensor* const> parts) {
  if (parts.empty()) return {};
  const auto B = parts[0]->batch(), T = parts[0]->time();
  std::size_t C = 0;
  for (const auto* p : parts) {
    if (p->batch() != B || p->time() != T) throw ValidationError("concat: batch/time mismatch");
    C += p->channels();
  }
  BatchTensor out(B, C, T);
  auto it = out.data().begin();
  for (const auto* p : parts) it = std::copy(p->data().begin(), p->data().end(), it);
  return out;
}

std::vector<BatchTensor> split_channels(const BatchTensor& t, std::span<const std::size_t> widths) {
  std::vector<BatchTensor> out;
  std::size_t offset = 0;
  const std::size_t block = t.batch() * t.time();
  for (auto w : widths) {
    BatchTensor part(t.batch(), w, t.time());
    std::copy_n(t.data().begin() + static_cast<long>(offset * block), w * block, part.data().begin());
    offset += w;
    out.push_back(std::move(part));
  }
  if (offset != t.channels()) throw ValidationError("split: widths do not cover the channel axis");
  return out;
}

bool all_finite(const BatchTensor& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Convolution

void Conv1dParams::validate() const {
  if (in_channels == 0 || out_channels == 0 || kernel == 0)
    throw ValidationError("conv1d: channel counts and kernel must be positive");
  if (weight.size() != out_channels * in_channels * kernel)
    throw ValidationError("conv1d: weight size does not match [out][in][kernel]");
  if (!bias.empty() && bias.size() != out_channels) throw ValidationError("conv1d: bias size mismatch");
}

namespace {

// Source time index for output t and tap k, or -1 when it falls in zero padding.
inline long tap_source(long t, long k, long pad_left, long T, Padding padding) {
  long s = t + k - pad_left;
  if (s >= 0 && s < T) return s;
  if (padding == Padding::Zero) return -1;
  s %= T;
  return s < 0 ? s + T : s;
}

void im2col(const BatchTensor& x, const Conv1dParams& p, std::vector<double>& cols) {
  const long B = static_cast<long>(x.batch()), T = static_cast<long>(x.time());
  const long K = static_cast<long>(p.kernel), pl = static_cast<long>(p.pad_left());
  const std::size_t BT = x.batch() * x.time();
  cols.assign(p.in_channels * p.kernel * BT, 0.0);
  for (std::size_t c = 0; c < p.in_channels; ++c) {
    const double* xc = x.channel(c).data();
    for (long k = 0; k < K; ++k) {
      double* row = cols.data() + (c * p.kernel + static_cast<std::size_t>(k)) * BT;
      for (long b = 0; b < B; ++b) {
        const double* xb = xc + b * T;
        double* rb = row + b * T;
        if (p.padding == Padding::Zero) {
          const long lo = std::max(0L, pl - k), hi = std::min(T, T + pl - k);
          for (long t = lo; t < hi; ++t) rb[t] = xb[t + k - pl];
        } else {
          for (long t = 0; t < T; ++t) rb[t] = xb[tap_source(t, k, pl, T, p.padding)];
        }
      }
    }
  }
}

void col2im(const std::vector<double>& dcols, const Conv1dParams& p, BatchTensor& dx) {
  const long B = static_cast<long>(dx.batch()), T = static_cast<long>(dx.time());
  const long K = static_cast<long>(p.kernel), pl = static_cast<long>(p.pad_left());
  const std::size_t BT = dx.batch() * dx.time();
  for (std::size_t c = 0; c < p.in_channels; ++c) {
    double* dxc = dx.channel(c).data();
    for (long k = 0; k < K; ++k) {
      const double* row = dcols.data() + (c * p.kernel + static_cast<std::size_t>(k)) * BT;
      for (long b = 0; b < B; ++b) {
        double* db = dxc + b * T;
        const double* rb = row + b * T;
        if (p.padding == Padding::Zero) {
          const long lo = std::max(0L, pl - k), hi = std::min(T, T + pl - k);
          for (long t = lo; t < hi; ++t) db[t + k - pl] += rb[t];
        } else {
          for (long t = 0; t < T; ++t) db[tap_source(t, k, pl, T, p.padding)] += rb[t];
        }
      }
    }
  }
}

}  // namespace

BatchTensor conv1d_forward(const BatchTensor& x, const Conv1dParams& p, Conv1dContext* ctx) {
  p.validate();
  if (x.channels() != p.in_channels)
    throw ValidationError("conv1d: input has " + std::to_string(x.channels()) + " channels, expected " +
                          std::to_string(p.in_channels));
  const std::size_t BT = x.batch() * x.time();
  const std::size_t CK = p.in_channels * p.kernel;
  BatchTensor out(x.batch(), p.out_channels, x.time());
  if (BT == 0) return out;

  std::vector<double> local_cols;
  const double* cols = x.data().data();
  if (p.kernel > 1) {
    std::vector<double>& buf = ctx ? ctx->columns : local_cols;
    im2col(x, p, buf);
    cols = buf.data();
  }
  if (!p.bias.empty())
    for (std::size_t o = 0; o < p.out_channels; ++o) std::fill_n(out.channel(o).data(), BT, p.bias[o]);
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(p.out_channels),
              static_cast<int>(BT), static_cast<int>(CK), 1.0, p.weight.data(), static_cast<int>(CK), cols,
              static_cast<int>(BT), p.bias.empty() ? 0.0 : 1.0, out.data().data(), static_cast<int>(BT));

  if (ctx) {
    ctx->valid = true;
    ctx->batch = x.batch();
    ctx->time = x.time();
    if (p.kernel == 1)
      ctx->input = x;
    else
      ctx->input = BatchTensor();
  }
  return out;
}

Conv1dGrads conv1d_backward(const BatchTensor& grad_out, const Conv1dContext& ctx, const Conv1dParams& p,
                            bool need_grad_x) {
  if (!ctx.valid) throw ContractError("conv1d_backward called without a saved forward context");
  if (grad_out.channels() != p.out_channels || grad_out.batch() != ctx.batch || grad_out.time() != ctx.time)
    throw ValidationError("conv1d_backward: gradient shape does not match the forward output");
  const std::size_t BT = ctx.batch * ctx.time;
  const std::size_t CK = p.in_channels * p.kernel;
  const double* cols = p.kernel == 1 ? ctx.input.data().data() : ctx.columns.data();

  Conv1dGrads g;
  g.grad_weight.assign(p.weight.size(), 0.0);
  if (BT > 0)
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(p.out_channels), static_cast<int>(CK),
                static_cast<int>(BT), 1.0, grad_out.data().data(), static_cast<int>(BT), cols,
                static_cast<int>(BT), 0.0, g.grad_weight.data(), static_cast<int>(CK));
  if (!p.bias.empty()) {
    g.grad_bias.assign(p.out_channels, 0.0);
    for (std::size_t o = 0; o < p.out_channels; ++o) {
      double s = 0.0;
      for (double v : grad_out.channel(o)) s += v;
      g.grad_bias[o] = s;
    }
  }
  if (!need_grad_x) return g;

  g.grad_x = BatchTensor(ctx.batch, p.in_channels, ctx.time);
  if (BT == 0) return g;
  if (p.kernel == 1) {
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(p.in_channels), static_cast<int>(BT),
                static_cast<int>(p.out_channels), 1.0, p.weight.data(), static_cast<int>(CK),
                grad_out.data().data(), static_cast<int>(BT), 0.0, g.grad_x.data().data(), static_cast<int>(BT));
  } else {
    std::vector<double> dcols(CK * BT);
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(CK), static_cast<int>(BT),
                static_cast<int>(p.out_channels), 1.0, p.weight.data(), static_cast<int>(CK),
                grad_out.data().data(), static_cast<int>(BT), 0.0, dcols.data(), static_cast<int>(BT));
    col2im(dcols, p, g.grad_x);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Batch normalisation

BatchNormParams BatchNormParams::make(std::size_t channels) {
  BatchNormParams p;
  p.channels = channels;
  p.gamma.assign(channels, 1.0);
  p.beta.assign(channels, 0.0);
  p.running_mean.assign(channels, 0.0);
  p.running_var.assign(channels, 1.0);
  return p;
}

BatchTensor batchnorm_forward(const BatchTensor& x, BatchNormParams& p, bool training, BatchNormContext* ctx,
                              bool update_running) {
  if (x.channels() != p.channels) throw ValidationError("batchnorm: channel mismatch");
  const std::size_t N = x.batch() * x.time();
  BatchTensor y(x.batch(), x.channels(), x.time());
  BatchTensor xhat(x.batch(), x.channels(), x.time());
  std::vector<double> inv_std(p.channels);
  for (std::size_t c = 0; c < p.channels; ++c) {
    const auto xc = x.channel(c);
    double mean, var;
    if (training) {
      if (N == 0) throw ValidationError("batchnorm: empty batch in training mode");
      double s = 0.0;
      for (double v : xc) s += v;
      mean = s / static_cast<double>(N);
      double sq = 0.0;
      for (double v : xc) sq += (v - mean) * (v - mean);
      var = sq / static_cast<double>(N);
      if (update_running) {
        const double unbiased = N > 1 ? sq / static_cast<double>(N - 1) : var;
        p.running_mean[c] = (1.0 - p.momentum) * p.running_mean[c] + p.momentum * mean;
        p.running_var[c] = (1.0 - p.momentum) * p.running_var[c] + p.momentum * unbiased;
      }
    } else {
      mean = p.running_mean[c];
      var = p.running_var[c];
    }
    const double is = 1.0 / std::sqrt(var + p.eps);
    inv_std[c] = is;
    auto hc = xhat.channel(c);
    auto yc = y.channel(c);
    for (std::size_t i = 0; i < N; ++i) {
      hc[i] = (xc[i] - mean) * is;
      yc[i] = p.gamma[c] * hc[i] + p.beta[c];
    }
  }
  if (ctx) {
    ctx->valid = true;
    ctx->training = training;
    ctx->xhat = std::move(xhat);
    ctx->inv_std = std::move(inv_std);
  }
  return y;
}

BatchNormGrads batchnorm_backward(const BatchTensor& g, const BatchNormContext& ctx, const BatchNormParams& p) {
  if (!ctx.valid) throw ContractError("batchnorm_backward called without a saved forward context");
  if (!g.same_shape(ctx.xhat)) throw ValidationError("batchnorm_backward: gradient shape mismatch");
  const std::size_t N = g.batch() * g.time();
  BatchNormGrads out;
  out.grad_x = BatchTensor(g.batch(), g.channels(), g.time());
  out.grad_gamma.assign(p.channels, 0.0);
  out.grad_beta.assign(p.channels, 0.0);
  for (std::size_t c = 0; c < p.channels; ++c) {
    const auto gc = g.channel(c);
    const auto hc = ctx.xhat.channel(c);
    double sum_g = 0.0, sum_gh = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      sum_g += gc[i];
      sum_gh += gc[i] * hc[i];
    }
    out.grad_beta[c] = sum_g;
    out.grad_gamma[c] = sum_gh;
    auto dx = out.grad_x.channel(c);
    const double scale = p.gamma[c] * ctx.inv_std[c];
    if (ctx.training) {
      const double inv_n = 1.0 / static_cast<double>(N);
      for (std::size_t i = 0; i < N; ++i) dx[i] = scale * (gc[i] - inv_n * sum_g - hc[i] * inv_n * sum_gh);
    } else {
      for (std::size_t i = 0; i < N; ++i) dx[i] = scale * gc[i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pointwise, pooling, head

BatchTensor relu_forward(const BatchTensor& x) {
  BatchTensor y = x;
  for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

BatchTensor relu_backward(const BatchTensor& grad_out, const BatchTensor& y) {
  if (!grad_out.same_shape(y)) throw ValidationError("relu_backward: shape mismatch");
  BatchTensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(y.data()[i] > 0.0)) g.data()[i] = 0.0;
  return g;
}

BatchTensor maxpool3_forward(const BatchTensor& x, Padding padding, MaxPoolContext* ctx) {
  const std::size_t B = x.batch(), C = x.channels(), T = x.time();
  BatchTensor y(B, C, T);
  std::vector<std::uint32_t> arg(ctx ? x.size() : 0);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t b = 0; b < B; ++b) {
      const double* xb = x.channel(c).data() + b * T;
      double* yb = y.channel(c).data() + b * T;
      for (std::size_t t = 0; t < T; ++t) {
        std::size_t best = t;
        for (long d : {-1L, 1L}) {
          long s = static_cast<long>(t) + d;
          if (s < 0 || s >= static_cast<long>(T)) {
            if (padding == Padding::Zero || T == 1) continue;
            s = (s + static_cast<long>(T)) % static_cast<long>(T);
          }
          if (xb[s] > xb[best]) best = static_cast<std::size_t>(s);
        }
        yb[t] = xb[best];
        if (ctx) arg[(c * B + b) * T + t] = static_cast<std::uint32_t>(best);
      }
    }
  if (ctx) {
    ctx->valid = true;
    ctx->argmax = std::move(arg);
    ctx->batch = B;
    ctx->channels = C;
    ctx->time = T;
  }
  return y;
}

BatchTensor maxpool3_backward(const BatchTensor& grad_out, const MaxPoolContext& ctx) {
  if (!ctx.valid) throw ContractError("maxpool3_backward called without a saved forward context");
  const std::size_t B = ctx.batch, C = ctx.channels, T = ctx.time;
  BatchTensor gx(B, C, T);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t b = 0; b < B; ++b) {
      const double* gb = grad_out.channel(c).data() + b * T;
      double* db = gx.channel(c).data() + b * T;
      const std::uint32_t* ab = ctx.argmax.data() + (c * B + b) * T;
      for (std::size_t t = 0; t < T; ++t) db[ab[t]] += gb[t];
    }
  return gx;
}

Matrix gap_forward(const BatchTensor& x) {
  Matrix out(x.batch(), x.channels());
  const double inv_t = x.time() ? 1.0 / static_cast<double>(x.time()) : 0.0;
  for (std::size_t c = 0; c < x.channels(); ++c)
    for (std::size_t b = 0; b < x.batch(); ++b) {
      const double* xb = x.channel(c).data() + b * x.time();
      double s = 0.0;
      for (std::size_t t = 0; t < x.time(); ++t) s += xb[t];
      out(b, c) = s * inv_t;
    }
  return out;
}

BatchTensor gap_backward(const Matrix& grad_out, std::size_t time) {
  BatchTensor gx(grad_out.rows, grad_out.cols, time);
  const double inv_t = time ? 1.0 / static_cast<double>(time) : 0.0;
  for (std::size_t c = 0; c < grad_out.cols; ++c)
    for (std::size_t b = 0; b < grad_out.rows; ++b) {
      double* gb = gx.channel(c).data() + b * time;
      std::fill_n(gb, time, grad_out(b, c) * inv_t);
    }
  return gx;
}

Matrix linear_forward(const Matrix& x, const LinearParams& p) {
  if (x.cols != p.in) throw ValidationError("linear: input width mismatch");
  Matrix y(x.rows, p.out);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t o = 0; o < p.out; ++o) {
      double s = p.bias[o];
      for (std::size_t i = 0; i < p.in; ++i) s += p.weight[o * p.in + i] * x(r, i);
      y(r, o) = s;
    }
  return y;
}

LinearGrads linear_backward(const Matrix& g, const Matrix& x, const LinearParams& p) {
  LinearGrads out;
  out.grad_x = Matrix(x.rows, p.in);
  out.grad_weight.assign(p.weight.size(), 0.0);
  out.grad_bias.assign(p.out, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t o = 0; o < p.out; ++o) {
      const double go = g(r, o);
      out.grad_bias[o] += go;
      for (std::size_t i = 0; i < p.in; ++i) {
        out.grad_weight[o * p.in + i] += go * x(r, i);
        out.grad_x(r, i) += go * p.weight[o * p.in + i];
      }
    }
  return out;
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.cols; ++c) mx = std::max(mx, logits(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) z += (p(r, c) = std::exp(logits(r, c) - mx));
    for (std::size_t c = 0; c < logits.cols; ++c) p(r, c) /= z;
  }
  return p;
}

SoftmaxCE softmax_ce_forward(const Matrix& logits, std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows) throw ValidationError("softmax_ce: label count != batch size");
  if (logits.rows == 0) throw ValidationError("softmax_ce: empty batch");
  SoftmaxCE out;
  out.probs = softmax(logits);
  double loss = 0.0;
  for (std::size_t r = 0; r < logits.rows; ++r) {
    if (labels[r] >= logits.cols) throw ValidationError("softmax_ce: label out of range");
    // log-sum-exp form keeps the loss finite for saturated probabilities
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.cols; ++c) mx = std::max(mx, logits(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) z += std::exp(logits(r, c) - mx);
    loss += (std::log(z) + mx) - logits(r, labels[r]);
  }
  out.loss = loss / static_cast<double>(logits.rows);
  return out;
}

Matrix softmax_ce_backward(const SoftmaxCE& fwd, std::span<const std::size_t> labels) {
  Matrix g = fwd.probs;
  const double inv_b = 1.0 / static_cast<double>(g.rows);
  for (std::size_t r = 0; r < g.rows; ++r) {
    g(r, labels[r]) -= 1.0;
    for (std::size_t c = 0; c < g.cols; ++c) g(r, c) *= inv_b;
  }
  return g;
}

}  // namespace s2r::nn
