#include <algorithm>
#include <cmath>

#include "s2r/dataio.hpp"

namespace s2r::dataio {

std::size_t window_start(std::size_t length, const LengthPolicy& policy, Rng& rng) {
  const auto L = static_cast<std::size_t>(policy.length);
  if (length <= L) return 0;
  const std::size_t span = length - L;
  if (policy.mode == WindowMode::TestCenterWindow) return span / 2;
  std::uniform_int_distribution<std::size_t> d(0, span);
  return d(rng);
}

LabeledSequence normalize_length(const LabeledSequence& seq, const LengthPolicy& policy, Rng& rng) {
  if (policy.length < 1) throw ValidationError("target length must be >= 1");
  seq.validate();
  const std::size_t T = seq.length();
  const auto L = static_cast<std::size_t>(policy.length);

  LabeledSequence out = seq;
  out.values.resize(L * kChannelCount);
  if (T < L) {
    for (std::size_t t = 0; t < L; ++t)
      std::copy_n(seq.values.begin() + (t % T) * kChannelCount, kChannelCount,
                  out.values.begin() + t * kChannelCount);
  } else {
    const std::size_t n = window_start(T, policy, rng);
    std::copy_n(seq.values.begin() + n * kChannelCount, L * kChannelCount, out.values.begin());
  }
  return out;
}

void AugmentConfig::validate() const {
  if (!(scale_lo >= 0.0) || !(scale_hi >= scale_lo))
    throw ValidationError("augment scale range must satisfy 0 <= lo <= hi");
  if (!(noise_sigma >= 0.0) || max_time_shift < 0)
    throw ValidationError("augment noise and shift must be >= 0");
  if (!(channel_dropout_prob >= 0.0 && channel_dropout_prob <= 1.0))
    throw ValidationError("channel dropout probability must lie in [0,1]");
}

LabeledSequence augment(const LabeledSequence& seq, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t T = seq.length();

  double scale = cfg.scale_lo;
  if (cfg.scale_hi > cfg.scale_lo) scale = std::uniform_real_distribution<double>(cfg.scale_lo, cfg.scale_hi)(rng);
  int shift = 0;
  if (cfg.max_time_shift > 0)
    shift = std::uniform_int_distribution<int>(-cfg.max_time_shift, cfg.max_time_shift)(rng);
  std::array<bool, kChannelCount> dropped{};
  if (cfg.channel_dropout_prob > 0.0) {
    std::bernoulli_distribution drop(cfg.channel_dropout_prob);
    for (auto& d : dropped) d = drop(rng);
  }

  LabeledSequence out = seq;
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma > 0.0 ? cfg.noise_sigma : 1.0);
  const auto iT = static_cast<long>(T);
  for (std::size_t t = 0; t < T; ++t) {
    const long src = ((static_cast<long>(t) - shift) % iT + iT) % iT;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      double v = 0.0;
      if (!dropped[c]) {
        v = seq.at(static_cast<std::size_t>(src), c) * scale;
        if (cfg.noise_sigma > 0.0) v += noise(rng);
      }
      out.at(t, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace s2r::dataio
