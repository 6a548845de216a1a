#include "s2r/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "s2r/types.hpp"

namespace s2r::nn {

ModelConfig reduced_config(std::size_t depth) {
  ModelConfig c;
  c.depth = depth;
  c.bottleneck = 4;
  c.filters = 4;
  c.kernels = {10, 20, 40};
  return c;
}

GradCheckReport grad_check(InceptionTimeModel& model, const BatchTensor& batch,
                           const std::vector<std::size_t>& labels, const GradCheckOptions& options) {
  GradCheckReport report;
  report.loss = model.loss_and_gradients(batch, labels);
  if (options.tamper) options.tamper(model);

  struct Slot {
    ParamRef ref;
    std::size_t offset;
  };
  std::vector<Slot> slots;
  std::size_t total = 0;
  for (auto& p : model.parameters()) {
    if (!p.trainable || model.block_frozen(p.block)) continue;
    slots.push_back({p, total});
    total += p.value->size();
    for (double g : *p.grad) report.finite = report.finite && std::isfinite(g);
  }
  report.parameters = total;
  if (total == 0) {
    report.passed = report.finite;
    return report;
  }

  // Snapshot analytic gradients: the finite-difference passes below do not
  // touch them, but tamper hooks may alias.
  std::vector<std::vector<double>> analytic;
  for (const auto& s : slots) analytic.push_back(*s.ref.grad);

  Rng rng(derive_seed(options.seed, "gradcheck"));
  std::vector<std::size_t> picks(total);
  for (std::size_t i = 0; i < total; ++i) picks[i] = i;
  std::shuffle(picks.begin(), picks.end(), rng);
  picks.resize(std::min(options.coordinates, total));

  for (auto flat : picks) {
    auto it = std::upper_bound(slots.begin(), slots.end(), flat,
                               [](std::size_t v, const Slot& s) { return v < s.offset; });
    const std::size_t si = static_cast<std::size_t>(std::distance(slots.begin(), it)) - 1;
    auto& slot = slots[si];
    const std::size_t j = flat - slot.offset;
    double& w = (*slot.ref.value)[j];
    const double saved = w;
    w = saved + options.step;
    const double up = model.loss_only(batch, labels, true);
    w = saved - options.step;
    const double down = model.loss_only(batch, labels, true);
    w = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    const double a = analytic[si][j];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
    const double rel = std::abs(a - numeric) / denom;
    report.finite = report.finite && std::isfinite(numeric);
    report.worst.push_back({slot.ref.name, j, a, numeric, rel});
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  report.coordinates = picks.size();
  std::sort(report.worst.begin(), report.worst.end(),
            [](const GradCheckEntry& x, const GradCheckEntry& y) { return x.rel_error > y.rel_error; });
  if (report.worst.size() > 5) report.worst.resize(5);
  report.passed = report.finite && report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace s2r::nn
