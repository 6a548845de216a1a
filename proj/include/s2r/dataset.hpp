#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "s2r/types.hpp"

namespace s2r {

inline constexpr int kDatasetSchemaVersion = 1;

// Provenance record: enough to regenerate the content bit-for-bit.
struct Manifest {
  int schema_version = kDatasetSchemaVersion;
  std::uint64_t seed = 0;
  std::string kind;  // "synthetic" | "surrogate_real" | derived names
  nlohmann::json config = nlohmann::json::object();
};

// Immutable collection of sequences with optional fold assignment. Copies
// share the underlying sequence storage.
class SequenceDataset {
 public:
  SequenceDataset() : sequences_(std::make_shared<const std::vector<LabeledSequence>>()) {}
  SequenceDataset(std::vector<LabeledSequence> sequences, Manifest manifest,
                  std::optional<std::vector<int>> fold_of = std::nullopt);

  const std::vector<LabeledSequence>& sequences() const { return *sequences_; }
  std::size_t size() const { return sequences_->size(); }
  bool empty() const { return sequences_->empty(); }
  const LabeledSequence& operator[](std::size_t i) const { return (*sequences_)[i]; }
  auto begin() const { return sequences_->begin(); }
  auto end() const { return sequences_->end(); }

  const Manifest& manifest() const { return manifest_; }

  bool has_folds() const { return fold_of_.has_value(); }
  const std::vector<int>& fold_of() const;
  int fold_count() const;
  std::vector<std::size_t> indices_in_fold(int fold) const;
  std::vector<std::size_t> indices_not_in_fold(int fold) const;

  SequenceDataset with_folds(std::vector<int> fold_of) const;
  SequenceDataset subset(const std::vector<std::size_t>& indices, std::string kind) const;

  std::vector<std::string> identity_ids() const;  // sorted, unique
  std::size_t count_label(EmotionLabel label) const;

 private:
  std::shared_ptr<const std::vector<LabeledSequence>> sequences_;
  Manifest manifest_;
  std::optional<std::vector<int>> fold_of_;
};

}  // namespace s2r
