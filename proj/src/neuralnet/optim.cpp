#include "s2r/nn/optim.hpp"

#include <cmath>

namespace s2r::nn {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ValidationError("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ValidationError("Adam epsilon must be > 0");
}

void adam_step(std::vector<std::vector<double>*>& params, const std::vector<const std::vector<double>*>& grads,
               const std::vector<bool>& frozen, AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != frozen.size())
    throw ValidationError("adam_step: parameter, gradient and freeze lists differ in length");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->size(), 0.0);
      state.v.emplace_back(p->size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ValidationError("adam_step: optimiser state shape mismatch");

  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (frozen[i]) continue;
    auto& w = *params[i];
    const auto& g = *grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (g.size() != w.size() || m.size() != w.size())
      throw ValidationError("adam_step: tensor size mismatch");
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void Adam::step(InceptionTimeModel& model) {
  std::vector<std::vector<double>*> params;
  std::vector<const std::vector<double>*> grads;
  std::vector<bool> frozen;
  for (auto& p : model.parameters()) {
    if (!p.trainable) continue;
    params.push_back(p.value);
    grads.push_back(p.grad);
    frozen.push_back(model.block_frozen(p.block));
  }
  adam_step(params, grads, frozen, state_, cfg_);
}

}  // namespace s2r::nn
