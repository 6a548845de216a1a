#include "s2r/signalgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace s2r::signalgen {

// Generated from assets/social_signals.v1.json at configure time.
extern const char* const kCanonicalSignalsJson;

const std::array<AUChannel, kChannelCount> kChannels = {{
    {AU::AU1, "AU1", "Inner brow raiser"},
    {AU::AU4, "AU4", "Brow lowerer"},
    {AU::AU5, "AU5", "Upper lid raiser"},
    {AU::AU7, "AU7", "Lid tightener"},
    {AU::AU9, "AU9", "Nose wrinkler"},
    {AU::AU10, "AU10", "Upper lip raiser"},
    {AU::AU15, "AU15", "Lip corner depressor"},
    {AU::AU16, "AU16", "Lower lip depressor"},
    {AU::AU17, "AU17", "Chin raiser"},
    {AU::AU23, "AU23", "Lip tightener"},
    {AU::AU25, "AU25", "Lips part"},
    {AU::AU26, "AU26", "Jaw drop"},
    {AU::AU61, "AU61", "Eyes left"},
    {AU::AU62, "AU62", "Eyes right"},
}};

AU parse_au(std::string_view id) {
  for (const auto& c : kChannels)
    if (c.id == id) return c.code;
  throw ValidationError("unknown action unit '" + std::string(id) + "'");
}

void SocialSignalSpec::validate() const {
  bool any_positive = false;
  std::set<std::pair<int, AU>> seen;
  for (const auto& k : keyframes) {
    if (k.frame < 0 || k.frame >= kSignalFrames)
      throw ValidationError("signal '" + id + "': keyframe frame " + std::to_string(k.frame) +
                            " outside 0.." + std::to_string(kSignalFrames - 1));
    if (!(k.intensity >= 0.0 && k.intensity <= 1.0))
      throw ValidationError("signal '" + id + "': keyframe intensity outside [0,1]");
    if (!seen.emplace(k.frame, k.au).second)
      throw ValidationError("signal '" + id + "': duplicate keyframe for " +
                            std::string(kChannels[channel_index(k.au)].id) + " at frame " +
                            std::to_string(k.frame));
    any_positive = any_positive || k.intensity > 0.0;
  }
  if (!any_positive) throw ValidationError("signal '" + id + "' has no positive keyframe");
}

VirtualIdentity VirtualIdentity::neutral(std::string id) {
  VirtualIdentity v;
  v.id = std::move(id);
  v.gain.fill(1.0);
  v.baseline.fill(0.0);
  v.tempo = 1.0;
  return v;
}

void NoiseConfig::validate() const {
  if (!(additive_sigma >= 0.0) || jitter_frames < 0 || !(drift_amplitude >= 0.0))
    throw ValidationError("noise magnitudes must be >= 0");
  if (!(occlusion_prob >= 0.0 && occlusion_prob <= 1.0))
    throw ValidationError("occlusion_prob must lie in [0,1]");
}

NoiseConfig NoiseConfig::synthetic_default() {
  return NoiseConfig{.additive_sigma = 0.03, .jitter_frames = 1, .drift_amplitude = 0.03,
                     .occlusion_prob = 0.02};
}

NoiseConfig NoiseConfig::real_default() {
  return NoiseConfig{.additive_sigma = 0.08, .jitter_frames = 3, .drift_amplitude = 0.12,
                     .occlusion_prob = 0.15};
}

AUTrajectory interpolate_trajectory(const SocialSignalSpec& spec) {
  spec.validate();
  std::array<std::vector<std::pair<int, double>>, kChannelCount> per_channel;
  for (const auto& k : spec.keyframes) per_channel[channel_index(k.au)].emplace_back(k.frame, k.intensity);

  AUTrajectory traj;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    auto& keys = per_channel[c];
    if (keys.empty()) continue;
    std::sort(keys.begin(), keys.end());
    std::size_t next = 0;
    for (int t = 0; t < kSignalFrames; ++t) {
      while (next < keys.size() && keys[next].first <= t) ++next;
      double v;
      if (next == 0) {
        v = 0.0;  // before first keyframe
      } else if (next == keys.size()) {
        v = keys.back().second;  // hold last
      } else {
        const auto& [f0, v0] = keys[next - 1];
        const auto& [f1, v1] = keys[next];
        const double w = static_cast<double>(t - f0) / static_cast<double>(f1 - f0);
        v = v0 + w * (v1 - v0);
      }
      traj.at(t, c) = v;
    }
  }
  return traj;
}

std::vector<SocialSignalSpec> signals_from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("signal document is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("signal document must be a JSON array");
  std::vector<SocialSignalSpec> specs;
  std::set<std::string> ids;
  try {
    for (const auto& item : doc) {
      SocialSignalSpec s;
      s.id = item.at("id").get<std::string>();
      s.label = parse_label(item.at("label").get<std::string>());
      for (const auto& k : item.at("keyframes")) {
        s.keyframes.push_back(Keyframe{k.at("frame").get<int>(), parse_au(k.at("au").get<std::string>()),
                                       k.at("intensity").get<double>()});
      }
      s.validate();
      if (!ids.insert(s.id).second) throw ValidationError("duplicate signal id '" + s.id + "'");
      specs.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed signal document: ") + e.what());
  }
  return specs;
}

std::vector<SocialSignalSpec> load_signals(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open signal file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return signals_from_json(ss.str());
}

std::string signals_to_json(const std::vector<SocialSignalSpec>& specs) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& s : specs) {
    nlohmann::json keys = nlohmann::json::array();
    for (const auto& k : s.keyframes)
      keys.push_back({{"frame", k.frame}, {"au", kChannels[channel_index(k.au)].id}, {"intensity", k.intensity}});
    doc.push_back({{"id", s.id}, {"label", to_string(s.label)}, {"keyframes", keys}});
  }
  return doc.dump(2);
}

std::vector<SocialSignalSpec> canonical_signals() {
  static const std::vector<SocialSignalSpec> specs = signals_from_json(kCanonicalSignalsJson);
  return specs;
}

namespace {

VirtualIdentity sample_identity(std::string id, Gender g, Ethnicity e, Rng& rng) {
  std::uniform_real_distribution<double> gain(kGainMin, kGainMax);
  std::uniform_real_distribution<double> base(kBaselineMin, kBaselineMax);
  std::uniform_real_distribution<double> tempo(kTempoMin, kTempoMax);
  VirtualIdentity v;
  v.id = std::move(id);
  v.gender = g;
  v.ethnicity = e;
  for (auto& x : v.gain) x = gain(rng);
  for (auto& x : v.baseline) x = base(rng);
  v.tempo = tempo(rng);
  return v;
}

std::string numbered(std::string_view prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return std::string(prefix) + "-" + buf;
}

double sample_traj(const AUTrajectory& traj, double pos, std::size_t c) {
  pos = std::clamp(pos, 0.0, static_cast<double>(kSignalFrames - 1));
  const int f0 = static_cast<int>(std::floor(pos));
  const double w = pos - f0;
  if (w == 0.0) return traj.at(f0, c);
  return traj.at(f0, c) + w * (traj.at(f0 + 1, c) - traj.at(f0, c));
}

// Shared rendering core. `n_frames` output frames sample the trajectory at
// position t * time_scale; frames past `active_frames` hold the final pose.
std::vector<float> render_frames(const VirtualIdentity& identity, const AUTrajectory& traj,
                                 const ViewingAngle& angle, const NoiseConfig& noise, Rng& rng,
                                 int n_frames, int active_frames, double time_scale) {
  const auto att = attenuation(angle);
  std::vector<double> clean(static_cast<std::size_t>(n_frames) * kChannelCount);
  for (int t = 0; t < n_frames; ++t) {
    const double pos = std::min(t, active_frames - 1) * time_scale;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const double v = identity.gain[c] * sample_traj(traj, pos, c) + identity.baseline[c];
      clean[t * kChannelCount + c] = att[c] * v;
    }
  }

  std::vector<double> out = clean;
  if (!noise.is_zero()) {
    noise.validate();
    if (noise.jitter_frames > 0) {
      std::uniform_int_distribution<int> shift_d(-noise.jitter_frames, noise.jitter_frames);
      const int shift = shift_d(rng);
      for (int t = 0; t < n_frames; ++t) {
        const int src = std::clamp(t - shift, 0, n_frames - 1);
        for (std::size_t c = 0; c < kChannelCount; ++c)
          out[t * kChannelCount + c] = clean[src * kChannelCount + c];
      }
    }
    if (noise.drift_amplitude > 0.0) {
      std::uniform_real_distribution<double> amp(-noise.drift_amplitude, noise.drift_amplitude);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      std::uniform_real_distribution<double> cycles(0.3, 1.0);
      for (std::size_t c = 0; c < kChannelCount; ++c) {
        const double a = amp(rng), p = phase(rng), f = cycles(rng);
        for (int t = 0; t < n_frames; ++t)
          out[t * kChannelCount + c] += a * std::sin(2.0 * std::numbers::pi * f * t / n_frames + p);
      }
    }
    if (noise.additive_sigma > 0.0) {
      std::normal_distribution<double> g(0.0, noise.additive_sigma);
      for (auto& v : out) v += g(rng);
    }
    if (noise.occlusion_prob > 0.0) {
      std::bernoulli_distribution occluded(noise.occlusion_prob);
      const int max_span = std::max(3, n_frames / 2);
      std::uniform_int_distribution<int> span_d(3, max_span);
      for (std::size_t c = 0; c < kChannelCount; ++c) {
        if (!occluded(rng)) continue;
        const int span = std::min(span_d(rng), n_frames);
        std::uniform_int_distribution<int> start_d(0, n_frames - span);
        const int start = start_d(rng);
        for (int t = start; t < start + span; ++t) out[t * kChannelCount + c] = 0.0;
      }
    }
  }

  std::vector<float> values(out.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    values[i] = static_cast<float>(std::clamp(out[i], 0.0, 1.0));
  return values;
}

}  // namespace

std::vector<VirtualIdentity> generate_identity_suite(std::uint64_t seed, std::string_view id_prefix) {
  Rng rng(derive_seed(seed, "identity-suite"));
  std::vector<VirtualIdentity> suite;
  suite.reserve(24);
  std::size_t n = 0;
  for (auto e : kAllEthnicities)
    for (auto g : {Gender::F, Gender::M})
      for (int r = 0; r < 3; ++r) suite.push_back(sample_identity(numbered(id_prefix, n++), g, e, rng));
  return suite;
}

std::vector<ViewingAngle> angle_grid() {
  return {{0, 0},    {-20, -15}, {-40, -30}, {20, 15}, {40, 30},
          {20, -15}, {40, -30},  {-20, 15},  {-40, 30}};
}

std::array<double, kChannelCount> attenuation(const ViewingAngle& angle) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double base = std::cos(angle.h_rot * kDeg) * std::cos(angle.v_rot * kDeg);
  std::array<double, kChannelCount> att;
  att.fill(base);
  // Lateral eye motion loses visibility when the camera moves to the side the
  // eyes turn away from; the opposite side is unaffected beyond `base`.
  att[channel_index(AU::AU61)] *= 1.0 - std::max(angle.h_rot, 0.0) / 90.0;
  att[channel_index(AU::AU62)] *= 1.0 - std::max(-angle.h_rot, 0.0) / 90.0;
  return att;
}

LabeledSequence render(const VirtualIdentity& identity, const SocialSignalSpec& spec,
                       const ViewingAngle& angle, const NoiseConfig& noise, Rng& rng) {
  const AUTrajectory traj = interpolate_trajectory(spec);
  LabeledSequence s;
  s.values = render_frames(identity, traj, angle, noise, rng, kSignalFrames, kSignalFrames, identity.tempo);
  s.label = spec.label;
  s.identity_id = identity.id;
  s.signal_id = spec.id;
  s.ethnicity = identity.ethnicity;
  s.gender = identity.gender;
  s.angle = angle;
  s.provenance = Provenance::Synthetic;
  std::ostringstream id;
  id << "syn/" << identity.id << "/" << spec.id << "/" << angle.h_rot << "_" << angle.v_rot;
  s.id = id.str();
  return s;
}

nlohmann::json NoiseConfig::to_json() const {
  return {{"additive_sigma", additive_sigma}, {"jitter_frames", jitter_frames},
          {"drift_amplitude", drift_amplitude}, {"occlusion_prob", occlusion_prob}};
}

NoiseConfig NoiseConfig::from_json(const nlohmann::json& j) {
  try {
    NoiseConfig n;
    n.additive_sigma = j.at("additive_sigma").get<double>();
    n.jitter_frames = j.at("jitter_frames").get<int>();
    n.drift_amplitude = j.at("drift_amplitude").get<double>();
    n.occlusion_prob = j.at("occlusion_prob").get<double>();
    n.validate();
    return n;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed noise config: ") + e.what());
  }
}

SequenceDataset generate_synthetic_dataset(const std::vector<VirtualIdentity>& suite,
                                           const std::vector<SocialSignalSpec>& signals,
                                           const std::vector<ViewingAngle>& angles,
                                           const NoiseConfig& noise, std::uint64_t seed) {
  if (suite.empty() || signals.empty() || angles.empty())
    throw ValidationError("synthetic generation needs at least one identity, signal and angle");
  noise.validate();
  Rng rng(derive_seed(seed, "synthetic-render"));
  std::vector<LabeledSequence> seqs;
  seqs.reserve(suite.size() * signals.size() * angles.size());
  for (const auto& identity : suite)
    for (const auto& spec : signals)
      for (const auto& angle : angles) seqs.push_back(render(identity, spec, angle, noise, rng));

  Manifest m;
  m.seed = seed;
  m.kind = "synthetic";
  m.config = {{"identities", suite.size()}, {"signals", signals.size()}, {"angles", angles.size()},
              {"noise", noise.to_json()}};
  return SequenceDataset(std::move(seqs), std::move(m));
}

SequenceDataset generate_surrogate_real(std::uint64_t suite_seed, const NoiseConfig& noise_real,
                                        std::uint64_t seed,
                                        const std::vector<SocialSignalSpec>& signals) {
  noise_real.validate();
  const auto syn = NoiseConfig::synthetic_default();
  if (!(noise_real.additive_sigma > syn.additive_sigma) || noise_real.drift_amplitude <= 0.0 ||
      noise_real.occlusion_prob <= 0.0)
    throw ValidationError(
        "surrogate-real noise must be harsher than the synthetic default "
        "(higher sigma, nonzero drift and occlusion)");

  std::map<EmotionLabel, std::vector<const SocialSignalSpec*>> by_label;
  for (const auto& s : signals) by_label[s.label].push_back(&s);
  for (auto l : kAllLabels)
    if (by_label[l].empty())
      throw ValidationError("surrogate-real generation needs signals for every label");

  // 20 identities: 15 Caucasian, 5 from the other groups. Ids use their own
  // prefix so they never collide with a synthetic suite.
  Rng id_rng(derive_seed(suite_seed, "surrogate-identities"));
  const std::array<Ethnicity, kRealIdentityCount> ethnicities = {
      Ethnicity::Caucasian, Ethnicity::Caucasian, Ethnicity::Caucasian, Ethnicity::Caucasian,
      Ethnicity::Caucasian, Ethnicity::Caucasian, Ethnicity::Caucasian, Ethnicity::Caucasian,
      Ethnicity::Caucasian, Ethnicity::Caucasian, Ethnicity::Caucasian, Ethnicity::Caucasian,
      Ethnicity::Caucasian, Ethnicity::Caucasian, Ethnicity::Caucasian, Ethnicity::Black,
      Ethnicity::Black,     Ethnicity::Asian,     Ethnicity::Asian,     Ethnicity::Hispanic};
  // Real performers cluster by group. Caucasian gains spread around 1; each
  // other group sits tightly at one edge of the gain range per channel.
  std::uniform_real_distribution<double> spread_d(-0.05, 0.05), caucasian_d(-0.25, 0.25);
  std::bernoulli_distribution high_d(0.5);
  std::map<Ethnicity, std::array<double, kChannelCount>> profile;
  for (auto e : kAllEthnicities)
    for (auto& g : profile[e])
      g = e == Ethnicity::Caucasian ? 1.0 : high_d(id_rng) ? kGainMax - 0.05 : kGainMin + 0.05;
  std::vector<VirtualIdentity> caucasian, minority;
  for (std::size_t i = 0; i < kRealIdentityCount; ++i) {
    auto v = sample_identity(numbered("real", i), i % 2 ? Gender::M : Gender::F, ethnicities[i], id_rng);
    for (std::size_t c = 0; c < kChannelCount; ++c)
      v.gain[c] = std::clamp(profile[v.ethnicity][c] +
                                 (v.ethnicity == Ethnicity::Caucasian ? caucasian_d(id_rng) : spread_d(id_rng)),
                             kGainMin, kGainMax);
    (v.ethnicity == Ethnicity::Caucasian ? caucasian : minority).push_back(std::move(v));
  }

  Rng rng(derive_seed(seed, "surrogate-render"));
  // Label multiset per demographic group: 26 minority clips split 9/9/8,
  // 97 Caucasian clips split 32/32/33, giving 41 per label overall.
  auto make_labels = [](std::size_t c, std::size_t a, std::size_t d) {
    std::vector<EmotionLabel> v;
    v.insert(v.end(), c, EmotionLabel::Confusion);
    v.insert(v.end(), a, EmotionLabel::Anger);
    v.insert(v.end(), d, EmotionLabel::Disgust);
    return v;
  };
  auto minority_labels = make_labels(9, 9, 8);
  auto caucasian_labels = make_labels(32, 32, 33);
  std::shuffle(minority_labels.begin(), minority_labels.end(), rng);
  std::shuffle(caucasian_labels.begin(), caucasian_labels.end(), rng);

  std::uniform_real_distribution<double> h_d(-40.0, 40.0), v_d(-30.0, 30.0);
  std::uniform_real_distribution<double> stretch_d(0.8, 2.2);
  std::uniform_real_distribution<double> scale_d(0.5, 1.3);

  std::vector<LabeledSequence> seqs;
  seqs.reserve(kRealSequenceCount);
  auto emit = [&](const VirtualIdentity& identity, EmotionLabel label) {
    const auto& pool = by_label[label];
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    SocialSignalSpec spec = *pool[pick(rng)];
    // Performer-specific intensity: one scale per channel.
    std::array<double, kChannelCount> scale;
    for (auto& s : scale) s = scale_d(rng);
    for (auto& k : spec.keyframes) k.intensity = std::min(1.0, k.intensity * scale[channel_index(k.au)]);
    if (std::none_of(spec.keyframes.begin(), spec.keyframes.end(),
                     [](const Keyframe& k) { return k.intensity > 0.0; }))
      spec = *pool.front();
    const AUTrajectory traj = interpolate_trajectory(spec);

    const double stretch = stretch_d(rng);
    const int active = std::clamp(static_cast<int>(std::lround(kSignalFrames * stretch)), kRealMinLength, 55);
    std::uniform_int_distribution<int> tail_d(0, std::min(20, kRealMaxLength - active));
    const int total = active + tail_d(rng);
    const double time_scale = identity.tempo * (kSignalFrames - 1) / static_cast<double>(active - 1);
    const ViewingAngle angle{h_d(rng), v_d(rng)};

    LabeledSequence s;
    s.values = render_frames(identity, traj, angle, noise_real, rng, total, active, time_scale);
    s.label = label;
    s.identity_id = identity.id;
    s.signal_id = spec.id;
    s.ethnicity = identity.ethnicity;
    s.gender = identity.gender;
    s.angle = angle;
    s.provenance = Provenance::SurrogateReal;
    seqs.push_back(std::move(s));
  };

  for (std::size_t i = 0; i < minority_labels.size(); ++i) emit(minority[i % minority.size()], minority_labels[i]);
  for (std::size_t i = 0; i < caucasian_labels.size(); ++i) emit(caucasian[i % caucasian.size()], caucasian_labels[i]);

  // Interleave so that clip order does not encode demographics.
  std::shuffle(seqs.begin(), seqs.end(), rng);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "real/clip-%03zu", i);
    seqs[i].id = buf;
  }

  Manifest m;
  m.seed = seed;
  m.kind = "surrogate_real";
  m.config = {{"suite_seed", suite_seed}, {"identities", kRealIdentityCount},
              {"signals", signals.size()}, {"noise", noise_real.to_json()}};
  return SequenceDataset(std::move(seqs), std::move(m));
}

}  // namespace s2r::signalgen
