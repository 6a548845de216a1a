#include "s2r/types.hpp"

#include <cmath>
#include <string>

namespace s2r {

std::string_view to_string(EmotionLabel v) {
  switch (v) {
    case EmotionLabel::Confusion: return "confusion";
    case EmotionLabel::Anger: return "anger";
    case EmotionLabel::Disgust: return "disgust";
  }
  return "?";
}

std::string_view to_string(Gender v) { return v == Gender::F ? "F" : "M"; }

std::string_view to_string(Ethnicity v) {
  switch (v) {
    case Ethnicity::Caucasian: return "caucasian";
    case Ethnicity::Black: return "black";
    case Ethnicity::Asian: return "asian";
    case Ethnicity::Hispanic: return "hispanic";
  }
  return "?";
}

std::string_view to_string(Provenance v) {
  return v == Provenance::Synthetic ? "synthetic" : "surrogate_real";
}

EmotionLabel parse_label(std::string_view s) {
  for (auto l : kAllLabels)
    if (to_string(l) == s) return l;
  throw ValidationError("unknown emotion label '" + std::string(s) + "'");
}

Gender parse_gender(std::string_view s) {
  if (s == "F") return Gender::F;
  if (s == "M") return Gender::M;
  throw ValidationError("unknown gender '" + std::string(s) + "'");
}

Ethnicity parse_ethnicity(std::string_view s) {
  for (auto e : kAllEthnicities)
    if (to_string(e) == s) return e;
  throw ValidationError("unknown ethnicity '" + std::string(s) + "'");
}

Provenance parse_provenance(std::string_view s) {
  if (s == "synthetic") return Provenance::Synthetic;
  if (s == "surrogate_real") return Provenance::SurrogateReal;
  throw ValidationError("unknown provenance '" + std::string(s) + "'");
}

void LabeledSequence::validate() const {
  if (values.empty() || values.size() % kChannelCount != 0)
    throw ValidationError("sequence '" + id + "' must hold T >= 1 frames of " +
                          std::to_string(kChannelCount) + " channels");
  for (float v : values)
    if (!std::isfinite(v)) throw ValidationError("sequence '" + id + "' has non-finite values");
}

bool same_metadata(const LabeledSequence& a, const LabeledSequence& b) {
  return a.id == b.id && a.label == b.label && a.identity_id == b.identity_id &&
         a.signal_id == b.signal_id && a.ethnicity == b.ethnicity && a.gender == b.gender &&
         a.angle == b.angle && a.provenance == b.provenance;
}

namespace {
// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  return mix(mix(parent) ^ mix(tag + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) {
  // FNV-1a over the tag
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(parent, h);
}

}  // namespace s2r
