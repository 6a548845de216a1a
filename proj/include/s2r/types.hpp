#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace s2r {

// Every trajectory, sequence and model input carries exactly this many AU
// channels, in the order given by signalgen::kChannels.
inline constexpr std::size_t kChannelCount = 14;
inline constexpr std::size_t kClassCount = 3;

using Rng = std::mt19937_64;

// Raised when caller-supplied inputs violate an operation's preconditions.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an internal protocol is misused (e.g. backward before forward).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class EmotionLabel : std::uint8_t { Confusion = 0, Anger = 1, Disgust = 2 };
enum class Gender : std::uint8_t { F = 0, M = 1 };
enum class Ethnicity : std::uint8_t { Caucasian = 0, Black = 1, Asian = 2, Hispanic = 3 };
enum class Provenance : std::uint8_t { Synthetic = 0, SurrogateReal = 1 };

inline constexpr std::array<EmotionLabel, kClassCount> kAllLabels = {
    EmotionLabel::Confusion, EmotionLabel::Anger, EmotionLabel::Disgust};
inline constexpr std::array<Ethnicity, 4> kAllEthnicities = {
    Ethnicity::Caucasian, Ethnicity::Black, Ethnicity::Asian, Ethnicity::Hispanic};

std::string_view to_string(EmotionLabel v);
std::string_view to_string(Gender v);
std::string_view to_string(Ethnicity v);
std::string_view to_string(Provenance v);

EmotionLabel parse_label(std::string_view s);
Gender parse_gender(std::string_view s);
Ethnicity parse_ethnicity(std::string_view s);
Provenance parse_provenance(std::string_view s);

inline std::size_t index_of(EmotionLabel l) { return static_cast<std::size_t>(l); }

struct ViewingAngle {
  double h_rot = 0.0;  // degrees
  double v_rot = 0.0;  // degrees

  friend bool operator==(const ViewingAngle&, const ViewingAngle&) = default;
};

// A [T x 14] multivariate AU time series plus its label and provenance.
// Values are stored row-major (frame-major) as 32-bit floats so that the
// on-disk representation is bit-identical to the in-memory one.
struct LabeledSequence {
  std::string id;
  std::vector<float> values;
  EmotionLabel label = EmotionLabel::Confusion;
  std::string identity_id;
  std::string signal_id;
  Ethnicity ethnicity = Ethnicity::Caucasian;
  Gender gender = Gender::F;
  ViewingAngle angle;
  Provenance provenance = Provenance::Synthetic;

  std::size_t length() const { return values.size() / kChannelCount; }
  float at(std::size_t frame, std::size_t channel) const {
    return values[frame * kChannelCount + channel];
  }
  float& at(std::size_t frame, std::size_t channel) {
    return values[frame * kChannelCount + channel];
  }
  std::span<const float> frame(std::size_t t) const {
    return std::span<const float>(values).subspan(t * kChannelCount, kChannelCount);
  }

  // Throws ValidationError unless T >= 1, the value count is a multiple of 14
  // and every value is finite.
  void validate() const;
};

bool same_metadata(const LabeledSequence& a, const LabeledSequence& b);

// Derives an independent 64-bit seed from a parent seed and a stream tag.
// Used to give folds, epochs and generators their own reproducible streams.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag);

}  // namespace s2r
