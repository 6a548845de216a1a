#include "s2r/nn/inception.hpp"

#include <cmath>
#include <string>

#include "s2r/types.hpp"

namespace s2r::nn {

// ---------------------------------------------------------------------------
// Config

void ModelConfig::validate() const {
  if (input_channels == 0 || classes < 2) throw ValidationError("model needs inputs and >= 2 classes");
  if (depth == 0) throw ValidationError("model depth must be >= 1");
  if (bottleneck == 0 || filters == 0) throw ValidationError("bottleneck and filter widths must be >= 1");
  if (kernels.empty()) throw ValidationError("model needs at least one kernel size");
  for (auto k : kernels)
    if (k == 0) throw ValidationError("kernel sizes must be >= 1");
  if (use_residual && residual_interval == 0) throw ValidationError("residual interval must be >= 1");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"input_channels", input_channels}, {"classes", classes},
          {"depth", depth},                   {"bottleneck", bottleneck},
          {"filters", filters},               {"kernels", kernels},
          {"use_residual", use_residual},     {"residual_interval", residual_interval},
          {"padding", padding == Padding::Zero ? "zero" : "circular"}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.input_channels = j.at("input_channels").get<std::size_t>();
  c.classes = j.at("classes").get<std::size_t>();
  c.depth = j.at("depth").get<std::size_t>();
  c.bottleneck = j.at("bottleneck").get<std::size_t>();
  c.filters = j.at("filters").get<std::size_t>();
  c.kernels = j.at("kernels").get<std::vector<std::size_t>>();
  c.use_residual = j.at("use_residual").get<bool>();
  c.residual_interval = j.at("residual_interval").get<std::size_t>();
  const auto pad = j.at("padding").get<std::string>();
  if (pad != "zero" && pad != "circular") throw ValidationError("unknown padding mode '" + pad + "'");
  c.padding = pad == "zero" ? Padding::Zero : Padding::Circular;
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Layers

Conv1dLayer::Conv1dLayer(std::size_t in, std::size_t out, std::size_t kernel, bool bias, Padding padding) {
  params.in_channels = in;
  params.out_channels = out;
  params.kernel = kernel;
  params.padding = padding;
  params.weight.assign(in * out * kernel, 0.0);
  if (bias) params.bias.assign(out, 0.0);
  grad_weight.assign(params.weight.size(), 0.0);
  grad_bias.assign(params.bias.size(), 0.0);
}

BatchTensor Conv1dLayer::forward(const BatchTensor& x, bool keep_context) {
  if (!keep_context) ctx_ = {};
  return conv1d_forward(x, params, keep_context ? &ctx_ : nullptr);
}

BatchTensor Conv1dLayer::backward(const BatchTensor& grad_out, bool need_grad_x) {
  auto g = conv1d_backward(grad_out, ctx_, params, need_grad_x);
  grad_weight = std::move(g.grad_weight);
  if (!params.bias.empty()) grad_bias = std::move(g.grad_bias);
  return std::move(g.grad_x);
}

BatchTensor BatchNormLayer::forward(const BatchTensor& x, bool training, bool keep_context) {
  if (!keep_context) ctx_ = {};
  return batchnorm_forward(x, params, training, keep_context ? &ctx_ : nullptr, update_running);
}

BatchTensor BatchNormLayer::backward(const BatchTensor& grad_out) {
  auto g = batchnorm_backward(grad_out, ctx_, params);
  grad_gamma = std::move(g.grad_gamma);
  grad_beta = std::move(g.grad_beta);
  return std::move(g.grad_x);
}

namespace {

void add_into(BatchTensor& acc, const BatchTensor& x) {
  if (!acc.same_shape(x)) throw ContractError("gradient accumulation shape mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += x.data()[i];
}

void collect_conv(std::vector<ParamRef>& out, Conv1dLayer& l, int block, const std::string& name) {
  out.push_back({name + ".weight", &l.params.weight, &l.grad_weight, block, true});
  if (!l.params.bias.empty()) out.push_back({name + ".bias", &l.params.bias, &l.grad_bias, block, true});
}

void collect_norm(std::vector<ParamRef>& out, BatchNormLayer& l, int block, const std::string& name) {
  out.push_back({name + ".gamma", &l.params.gamma, &l.grad_gamma, block, true});
  out.push_back({name + ".beta", &l.params.beta, &l.grad_beta, block, true});
  out.push_back({name + ".running_mean", &l.params.running_mean, nullptr, block, false});
  out.push_back({name + ".running_var", &l.params.running_var, nullptr, block, false});
}

void he_uniform(std::vector<double>& w, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> d(-limit, limit);
  for (auto& v : w) v = d(rng);
}

void init_conv(Conv1dLayer& l, Rng& rng) {
  he_uniform(l.params.weight, l.params.in_channels * l.params.kernel, rng);
}

}  // namespace

InceptionBlock::InceptionBlock(std::size_t in_channels, const ModelConfig& cfg) : padding(cfg.padding) {
  has_bottleneck = in_channels > 1;
  const std::size_t branch_in = has_bottleneck ? cfg.bottleneck : in_channels;
  if (has_bottleneck) bottleneck = Conv1dLayer(in_channels, cfg.bottleneck, 1, false, cfg.padding);
  for (auto k : cfg.kernels) branches.emplace_back(branch_in, cfg.filters, k, false, cfg.padding);
  pool_conv = Conv1dLayer(in_channels, cfg.filters, 1, false, cfg.padding);
  norm = BatchNormLayer(cfg.block_width());
}

BatchTensor InceptionBlock::forward(const BatchTensor& x, bool training, bool keep_context) {
  BatchTensor z_local;
  const BatchTensor* z = &x;
  if (has_bottleneck) {
    z_local = bottleneck.forward(x, keep_context);
    z = &z_local;
  }
  std::vector<BatchTensor> outs;
  outs.reserve(branches.size() + 1);
  for (auto& b : branches) outs.push_back(b.forward(*z, keep_context));
  if (!keep_context) pool_ctx_ = {};
  const BatchTensor pooled = maxpool3_forward(x, padding, keep_context ? &pool_ctx_ : nullptr);
  outs.push_back(pool_conv.forward(pooled, keep_context));

  std::vector<const BatchTensor*> parts;
  for (const auto& o : outs) parts.push_back(&o);
  BatchTensor y = relu_forward(norm.forward(concat_channels(parts), training, keep_context));
  if (keep_context)
    out_ = y;
  else
    out_ = BatchTensor();
  return y;
}

BatchTensor InceptionBlock::backward(const BatchTensor& grad_out, bool need_grad_x) {
  if (out_.empty()) throw ContractError("inception block backward without a recorded forward pass");
  BatchTensor g = norm.backward(relu_backward(grad_out, out_));
  std::vector<std::size_t> widths(branches.size() + 1, pool_conv.params.out_channels);
  auto parts = split_channels(g, widths);

  const bool need_dz = has_bottleneck || need_grad_x;
  BatchTensor dz;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    BatchTensor d = branches[i].backward(parts[i], need_dz);
    if (!need_dz) continue;
    if (dz.empty())
      dz = std::move(d);
    else
      add_into(dz, d);
  }
  BatchTensor dpool = pool_conv.backward(parts.back(), need_grad_x);
  if (has_bottleneck) {
    BatchTensor dx = bottleneck.backward(dz, need_grad_x);
    if (!need_grad_x) return {};
    add_into(dx, maxpool3_backward(dpool, pool_ctx_));
    return dx;
  }
  if (!need_grad_x) return {};
  add_into(dz, maxpool3_backward(dpool, pool_ctx_));
  return dz;
}

void InceptionBlock::collect(std::vector<ParamRef>& out, int block, const std::string& prefix) {
  if (has_bottleneck) collect_conv(out, bottleneck, block, prefix + ".bottleneck");
  for (std::size_t i = 0; i < branches.size(); ++i)
    collect_conv(out, branches[i], block, prefix + ".conv" + std::to_string(branches[i].params.kernel));
  collect_conv(out, pool_conv, block, prefix + ".pool_conv");
  collect_norm(out, norm, block, prefix + ".bn");
}

Shortcut::Shortcut(std::size_t in_channels, std::size_t out_channels, Padding padding)
    : conv(in_channels, out_channels, 1, false, padding), norm(out_channels) {}

BatchTensor Shortcut::forward(const BatchTensor& x, bool training, bool keep_context) {
  return norm.forward(conv.forward(x, keep_context), training, keep_context);
}

BatchTensor Shortcut::backward(const BatchTensor& grad_out, bool need_grad_x) {
  return conv.backward(norm.backward(grad_out), need_grad_x);
}

void Shortcut::collect(std::vector<ParamRef>& out, int block, const std::string& prefix) {
  collect_conv(out, conv, block, prefix + ".conv");
  collect_norm(out, norm, block, prefix + ".bn");
}

// ---------------------------------------------------------------------------
// Model

InceptionTimeModel::InceptionTimeModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
  cfg_.validate();
  std::size_t in = cfg_.input_channels;
  std::size_t res_in = in;
  has_shortcut_.assign(cfg_.depth, false);
  shortcuts_.resize(cfg_.depth);
  for (std::size_t i = 0; i < cfg_.depth; ++i) {
    blocks_.emplace_back(in, cfg_);
    in = cfg_.block_width();
    if (shortcut_after(i)) {
      has_shortcut_[i] = true;
      shortcuts_[i] = Shortcut(res_in, in, cfg_.padding);
      res_in = in;
    }
  }
  head_.in = cfg_.block_width();
  head_.out = cfg_.classes;
  head_.weight.assign(head_.in * head_.out, 0.0);
  head_.bias.assign(head_.out, 0.0);
  grad_head_w_.assign(head_.weight.size(), 0.0);
  grad_head_b_.assign(head_.bias.size(), 0.0);

  Rng rng(derive_seed(seed, "inception-init"));
  for (std::size_t i = 0; i < cfg_.depth; ++i) {
    auto& b = blocks_[i];
    if (b.has_bottleneck) init_conv(b.bottleneck, rng);
    for (auto& br : b.branches) init_conv(br, rng);
    init_conv(b.pool_conv, rng);
    if (has_shortcut_[i]) init_conv(shortcuts_[i].conv, rng);
  }
  he_uniform(head_.weight, head_.in, rng);
  sum_outputs_.resize(cfg_.depth);
}

bool InceptionTimeModel::shortcut_after(std::size_t block) const {
  return cfg_.use_residual && (block + 1) % cfg_.residual_interval == 0;
}

void InceptionTimeModel::set_freeze(std::size_t first_n_blocks) {
  if (first_n_blocks > cfg_.depth)
    throw ValidationError("cannot freeze " + std::to_string(first_n_blocks) + " of " +
                          std::to_string(cfg_.depth) + " blocks");
  frozen_ = first_n_blocks;
}

ForwardResult InceptionTimeModel::forward(const BatchTensor& x, bool training) {
  if (x.channels() != cfg_.input_channels)
    throw ValidationError("model expects " + std::to_string(cfg_.input_channels) + " input channels");
  if (x.batch() == 0 || x.time() == 0) throw ValidationError("model input must have B >= 1 and T >= 1");
  const bool record = training;
  recorded_ = record;
  time_ = x.time();

  auto set_stats = [&](BatchNormLayer& n) { n.update_running = stats_update_; };
  BatchTensor h = x;
  BatchTensor res_src = x;
  for (std::size_t i = 0; i < cfg_.depth; ++i) {
    const bool frozen = block_frozen(static_cast<int>(i));
    const bool train_i = training && !frozen;
    const bool keep = record && !frozen;
    set_stats(blocks_[i].norm);
    BatchTensor y = blocks_[i].forward(h, train_i, keep);
    if (has_shortcut_[i]) {
      set_stats(shortcuts_[i].norm);
      const BatchTensor s = shortcuts_[i].forward(res_src, train_i, keep);
      add_into(y, s);
      y = relu_forward(y);
      if (keep) sum_outputs_[i] = y;
      res_src = y;
    }
    h = std::move(y);
  }
  ForwardResult r;
  pooled_ = gap_forward(h);
  r.logits = linear_forward(pooled_, head_);
  r.probs = softmax(r.logits);
  return r;
}

double InceptionTimeModel::backward(const ForwardResult& fwd, std::span<const std::size_t> labels) {
  if (!recorded_) throw ContractError("backward() requires a preceding training-mode forward()");
  zero_grad();
  const SoftmaxCE ce = softmax_ce_forward(fwd.logits, labels);
  const Matrix dlogits = softmax_ce_backward(ce, labels);
  auto lg = linear_backward(dlogits, pooled_, head_);
  grad_head_w_ = std::move(lg.grad_weight);
  grad_head_b_ = std::move(lg.grad_bias);
  if (frozen_ == cfg_.depth) return ce.loss;

  BatchTensor g = gap_backward(lg.grad_x, time_);
  std::vector<BatchTensor> res_grad(cfg_.depth);
  for (std::size_t ii = cfg_.depth; ii-- > frozen_;) {
    if (has_shortcut_[ii]) {
      g = relu_backward(g, sum_outputs_[ii]);
      const std::size_t src_block = ii + 1 - cfg_.residual_interval;
      const bool need = src_block > frozen_;
      BatchTensor gs = shortcuts_[ii].backward(g, need);
      if (need) {
        if (res_grad[src_block].empty())
          res_grad[src_block] = std::move(gs);
        else
          add_into(res_grad[src_block], gs);
      }
    }
    const bool need_x = ii > frozen_;
    g = blocks_[ii].backward(g, need_x);
    if (need_x && !res_grad[ii].empty()) add_into(g, res_grad[ii]);
  }
  return ce.loss;
}

double InceptionTimeModel::loss_and_gradients(const BatchTensor& x, std::span<const std::size_t> labels) {
  const auto fwd = forward(x, true);
  return backward(fwd, labels);
}

double InceptionTimeModel::loss_only(const BatchTensor& x, std::span<const std::size_t> labels, bool training) {
  const bool saved = stats_update_;
  stats_update_ = false;
  ForwardResult r;
  try {
    r = forward(x, training);
  } catch (...) {
    stats_update_ = saved;
    throw;
  }
  stats_update_ = saved;
  recorded_ = false;
  return softmax_ce_forward(r.logits, labels).loss;
}

std::vector<ParamRef> InceptionTimeModel::parameters() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < cfg_.depth; ++i) {
    const std::string prefix = "block" + std::to_string(i);
    blocks_[i].collect(out, static_cast<int>(i), prefix);
    if (has_shortcut_[i]) shortcuts_[i].collect(out, static_cast<int>(i), prefix + ".shortcut");
  }
  out.push_back({"head.weight", &head_.weight, &grad_head_w_, -1, true});
  out.push_back({"head.bias", &head_.bias, &grad_head_b_, -1, true});
  return out;
}

std::size_t InceptionTimeModel::trainable_parameter_count() {
  std::size_t n = 0;
  for (const auto& p : parameters())
    if (p.trainable) n += p.value->size();
  return n;
}

void InceptionTimeModel::zero_grad() {
  for (auto& p : parameters())
    if (p.grad) std::fill(p.grad->begin(), p.grad->end(), 0.0);
}

}  // namespace s2r::nn
