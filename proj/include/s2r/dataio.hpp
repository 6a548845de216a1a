#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "s2r/dataset.hpp"
#include "s2r/types.hpp"

namespace s2r::dataio {

enum class WindowMode { TrainRandomWindow, TestCenterWindow };

struct LengthPolicy {
  int length = 25;
  WindowMode mode = WindowMode::TestCenterWindow;
};

// Loops short sequences cyclically; crops long ones to a random (train) or
// centred (test) window of `policy.length` frames. The rng is consulted only
// for TrainRandomWindow on sequences longer than the target.
LabeledSequence normalize_length(const LabeledSequence& seq, const LengthPolicy& policy, Rng& rng);

// Returns the window start used for T >= L; exposed for property tests.
std::size_t window_start(std::size_t length, const LengthPolicy& policy, Rng& rng);

struct AugmentConfig {
  double scale_lo = 1.0;
  double scale_hi = 1.0;
  double noise_sigma = 0.0;
  int max_time_shift = 0;
  double channel_dropout_prob = 0.0;

  void validate() const;
  static AugmentConfig identity() { return {}; }
  static AugmentConfig training_default() {
    return {.scale_lo = 0.85, .scale_hi = 1.15, .noise_sigma = 0.02, .max_time_shift = 2,
            .channel_dropout_prob = 0.05};
  }
};

// One draw of (scale, shift, dropout mask) per call, applied to all frames.
LabeledSequence augment(const LabeledSequence& seq, const AugmentConfig& cfg, Rng& rng);

struct FoldAssignment {
  SequenceDataset dataset;         // carries fold_of
  std::size_t minority_in_fold0 = 0;
  std::size_t minority_overflow = 0;  // non-Caucasian sequences that did not fit fold 0
};

// Stratified k-fold partition with near-equal fold sizes. With
// `minority_fold`, fold 0 is filled with non-Caucasian sequences first.
FoldAssignment assign_folds(const SequenceDataset& dataset, int k, bool minority_fold, Rng& rng);

struct SyntheticSplit {
  SequenceDataset train;
  SequenceDataset val;
  std::vector<std::string> val_identities;
};

SyntheticSplit split_synthetic_by_identity(const SequenceDataset& dataset, std::size_t n_val_identities,
                                           Rng& rng);

// Per-epoch synthetic sampler: floor(ratio * identities) identities, one
// random angle for every (identity, signal) pair.
class MixedRatioSampler {
 public:
  MixedRatioSampler(const SequenceDataset& synth, double ratio);

  std::size_t identities_per_epoch() const { return n_identities_; }
  std::size_t synthetic_per_epoch() const;

  // Indices into the synthetic dataset for one epoch's selection.
  std::vector<std::size_t> sample_indices(Rng& rng) const;

 private:
  const SequenceDataset* synth_;
  std::vector<std::string> identities_;
  // groups_[identity][signal] -> candidate sequence indices (one per angle)
  std::vector<std::vector<std::vector<std::size_t>>> groups_;
  std::size_t n_identities_ = 0;
};

std::vector<LabeledSequence> mixed_ratio_epoch(const std::vector<LabeledSequence>& real_train,
                                               const SequenceDataset& synth, double ratio, Rng& rng);

// Load failures are distinguishable by kind.
class LoadError : public std::runtime_error {
 public:
  enum class Kind { Io, CorruptManifest, DimensionMismatch, ChecksumMismatch };
  LoadError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kSequencesFile = "sequences.bin";

void save_dataset(const SequenceDataset& dataset, const std::filesystem::path& dir);
SequenceDataset load_dataset(const std::filesystem::path& dir);

std::uint32_t crc32_of(const void* data, std::size_t size);

}  // namespace s2r::dataio
