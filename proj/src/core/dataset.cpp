#include "s2r/dataset.hpp"

#include <algorithm>
#include <set>

namespace s2r {

SequenceDataset::SequenceDataset(std::vector<LabeledSequence> sequences, Manifest manifest,
                                 std::optional<std::vector<int>> fold_of)
    : sequences_(std::make_shared<const std::vector<LabeledSequence>>(std::move(sequences))),
      manifest_(std::move(manifest)) {
  for (const auto& s : *sequences_) s.validate();
  if (fold_of) *this = with_folds(std::move(*fold_of));
}

const std::vector<int>& SequenceDataset::fold_of() const {
  if (!fold_of_) throw ValidationError("dataset has no fold assignment");
  return *fold_of_;
}

int SequenceDataset::fold_count() const {
  if (!fold_of_ || fold_of_->empty()) return 0;
  return *std::max_element(fold_of_->begin(), fold_of_->end()) + 1;
}

std::vector<std::size_t> SequenceDataset::indices_in_fold(int fold) const {
  const auto& f = fold_of();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> SequenceDataset::indices_not_in_fold(int fold) const {
  const auto& f = fold_of();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] != fold) out.push_back(i);
  return out;
}

SequenceDataset SequenceDataset::with_folds(std::vector<int> fold_of) const {
  if (fold_of.size() != size())
    throw ValidationError("fold assignment size does not match dataset size");
  for (int f : fold_of)
    if (f < 0) throw ValidationError("fold indices must be non-negative");
  SequenceDataset out = *this;
  out.fold_of_ = std::move(fold_of);
  return out;
}

SequenceDataset SequenceDataset::subset(const std::vector<std::size_t>& indices,
                                        std::string kind) const {
  std::vector<LabeledSequence> seqs;
  seqs.reserve(indices.size());
  for (auto i : indices) seqs.push_back((*sequences_).at(i));
  Manifest m = manifest_;
  m.config["parent_kind"] = manifest_.kind;
  m.kind = std::move(kind);
  return SequenceDataset(std::move(seqs), std::move(m));
}

std::vector<std::string> SequenceDataset::identity_ids() const {
  std::set<std::string> ids;
  for (const auto& s : *sequences_) ids.insert(s.identity_id);
  return {ids.begin(), ids.end()};
}

std::size_t SequenceDataset::count_label(EmotionLabel label) const {
  return static_cast<std::size_t>(std::count_if(
      sequences_->begin(), sequences_->end(), [&](const auto& s) { return s.label == label; }));
}

}  // namespace s2r
