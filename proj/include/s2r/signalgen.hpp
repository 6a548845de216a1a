#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "s2r/dataset.hpp"
#include "s2r/types.hpp"

namespace s2r::signalgen {

inline constexpr int kSignalFrames = 25;

enum class AU : std::uint8_t {
  AU1, AU4, AU5, AU7, AU9, AU10, AU15, AU16, AU17, AU23, AU25, AU26, AU61, AU62
};

struct AUChannel {
  AU code;
  std::string_view id;    // "AU17"
  std::string_view name;  // "Chin raiser"
};

// Fixed, ordered channel set. Column c of every trajectory is kChannels[c].
extern const std::array<AUChannel, kChannelCount> kChannels;

inline std::size_t channel_index(AU au) { return static_cast<std::size_t>(au); }
AU parse_au(std::string_view id);

struct Keyframe {
  int frame = 0;
  AU au = AU::AU1;
  double intensity = 0.0;

  friend bool operator==(const Keyframe&, const Keyframe&) = default;
};

struct SocialSignalSpec {
  std::string id;
  EmotionLabel label = EmotionLabel::Confusion;
  std::vector<Keyframe> keyframes;

  // Throws ValidationError for frames outside 0..24, intensities outside
  // [0,1], or a spec with no positive keyframe.
  void validate() const;

  friend bool operator==(const SocialSignalSpec&, const SocialSignalSpec&) = default;
};

// [25 x 14] row-major intensities in [0,1].
struct AUTrajectory {
  std::array<double, kSignalFrames * kChannelCount> values{};

  double at(int frame, std::size_t channel) const { return values[frame * kChannelCount + channel]; }
  double& at(int frame, std::size_t channel) { return values[frame * kChannelCount + channel]; }
};

struct VirtualIdentity {
  std::string id;
  Gender gender = Gender::F;
  Ethnicity ethnicity = Ethnicity::Caucasian;
  std::array<double, kChannelCount> gain{};      // [0.6, 1.4]
  std::array<double, kChannelCount> baseline{};  // [0, 0.1]
  double tempo = 1.0;                            // [0.85, 1.15]

  static VirtualIdentity neutral(std::string id = "neutral");
};

inline constexpr double kGainMin = 0.6, kGainMax = 1.4;
inline constexpr double kBaselineMin = 0.0, kBaselineMax = 0.1;
inline constexpr double kTempoMin = 0.85, kTempoMax = 1.15;

struct NoiseConfig {
  double additive_sigma = 0.0;
  int jitter_frames = 0;
  double drift_amplitude = 0.0;
  double occlusion_prob = 0.0;

  void validate() const;
  nlohmann::json to_json() const;
  static NoiseConfig from_json(const nlohmann::json& j);
  bool is_zero() const {
    return additive_sigma == 0.0 && jitter_frames == 0 && drift_amplitude == 0.0 &&
           occlusion_prob == 0.0;
  }

  // Defaults used for the synthetic suite and for the harsher surrogate
  // real domain. Calibrated against the 1-NN DTW hold-out floor.
  static NoiseConfig synthetic_default();
  static NoiseConfig real_default();
};

AUTrajectory interpolate_trajectory(const SocialSignalSpec& spec);

std::vector<SocialSignalSpec> canonical_signals();

// JSON array of {id, label, keyframes:[{frame, au, intensity}]}.
std::vector<SocialSignalSpec> signals_from_json(std::string_view json_text);
std::vector<SocialSignalSpec> load_signals(const std::filesystem::path& path);
std::string signals_to_json(const std::vector<SocialSignalSpec>& specs);

// 24 identities: 12 per gender, 6 per ethnicity, 3 per (gender, ethnicity).
std::vector<VirtualIdentity> generate_identity_suite(std::uint64_t seed,
                                                     std::string_view id_prefix = "syn");

std::vector<ViewingAngle> angle_grid();

// Per-channel visibility factor in (0, 1] for a viewing angle.
std::array<double, kChannelCount> attenuation(const ViewingAngle& angle);

LabeledSequence render(const VirtualIdentity& identity, const SocialSignalSpec& spec,
                       const ViewingAngle& angle, const NoiseConfig& noise, Rng& rng);

SequenceDataset generate_synthetic_dataset(const std::vector<VirtualIdentity>& suite,
                                           const std::vector<SocialSignalSpec>& signals,
                                           const std::vector<ViewingAngle>& angles,
                                           const NoiseConfig& noise, std::uint64_t seed);

inline constexpr std::size_t kRealSequenceCount = 123;
inline constexpr std::size_t kRealPerLabel = 41;
inline constexpr std::size_t kRealNonCaucasian = 26;
inline constexpr std::size_t kRealIdentityCount = 20;
inline constexpr int kRealMinLength = 20;
inline constexpr int kRealMaxLength = 75;

// Shifted "real" domain with the class and demographic statistics of the
// in-the-wild clip collection: 123 clips, 41 per label, 26 from
// non-Caucasian identities, lengths in [20, 75].
SequenceDataset generate_surrogate_real(std::uint64_t suite_seed, const NoiseConfig& noise_real,
                                        std::uint64_t seed,
                                        const std::vector<SocialSignalSpec>& signals);

}  // namespace s2r::signalgen
