#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "s2r/dataio.hpp"

namespace s2r::dataio {

namespace {

// Deals indices into folds round-robin, skipping full folds. Callers pass the
// indices grouped by label so each label spreads evenly across folds.
void deal(const std::vector<std::size_t>& indices, std::vector<int>& fold_of,
          std::vector<std::size_t>& remaining, int& cursor) {
  const int k = static_cast<int>(remaining.size());
  for (auto idx : indices) {
    int tries = 0;
    while (remaining[cursor] == 0) {
      cursor = (cursor + 1) % k;
      if (++tries > k) throw ContractError("fold capacities exhausted");
    }
    fold_of[idx] = cursor;
    --remaining[cursor];
    cursor = (cursor + 1) % k;
  }
}

std::array<std::vector<std::size_t>, kClassCount> by_label(const SequenceDataset& ds,
                                                           const std::vector<std::size_t>& idx,
                                                           Rng& rng) {
  std::array<std::vector<std::size_t>, kClassCount> out;
  for (auto i : idx) out[index_of(ds[i].label)].push_back(i);
  for (auto& v : out) std::shuffle(v.begin(), v.end(), rng);
  return out;
}

}  // namespace

FoldAssignment assign_folds(const SequenceDataset& dataset, int k, bool minority_fold, Rng& rng) {
  if (k < 2) throw ValidationError("fold count must be >= 2");
  if (static_cast<std::size_t>(k) > dataset.size())
    throw ValidationError("fold count exceeds dataset size");
  for (const auto& s : dataset)
    if (s.provenance != Provenance::SurrogateReal)
      throw ValidationError("fold assignment applies to the surrogate-real dataset only");

  const std::size_t n = dataset.size();
  std::vector<std::size_t> remaining(k, n / k);
  for (std::size_t f = 0; f < n % k; ++f) ++remaining[f];

  std::vector<int> fold_of(n, -1);
  std::vector<std::size_t> rest;
  FoldAssignment result;

  if (minority_fold) {
    std::vector<std::size_t> minority, majority;
    for (std::size_t i = 0; i < n; ++i)
      (dataset[i].ethnicity == Ethnicity::Caucasian ? majority : minority).push_back(i);

    auto m = by_label(dataset, minority, rng);
    auto c = by_label(dataset, majority, rng);
    std::array<std::size_t, kClassCount> taken{};
    // Fill fold 0 with minority sequences, cycling labels for stratification.
    bool progress = true;
    while (remaining[0] > 0 && progress) {
      progress = false;
      for (std::size_t l = 0; l < kClassCount && remaining[0] > 0; ++l) {
        if (m[l].empty()) continue;
        fold_of[m[l].back()] = 0;
        m[l].pop_back();
        ++taken[l];
        --remaining[0];
        ++result.minority_in_fold0;
        progress = true;
      }
    }
    // Top up with Caucasian sequences from the least represented label.
    while (remaining[0] > 0) {
      std::size_t best = kClassCount;
      for (std::size_t l = 0; l < kClassCount; ++l)
        if (!c[l].empty() && (best == kClassCount || taken[l] < taken[best])) best = l;
      if (best == kClassCount) break;
      fold_of[c[best].back()] = 0;
      c[best].pop_back();
      ++taken[best];
      --remaining[0];
    }
    for (std::size_t l = 0; l < kClassCount; ++l) {
      result.minority_overflow += m[l].size();
      rest.insert(rest.end(), m[l].begin(), m[l].end());
      rest.insert(rest.end(), c[l].begin(), c[l].end());
    }
    // Regroup the leftovers by label for dealing.
    std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
      return index_of(dataset[a].label) < index_of(dataset[b].label);
    });
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (auto& v : by_label(dataset, all, rng)) rest.insert(rest.end(), v.begin(), v.end());
  }

  int cursor = 0;
  deal(rest, fold_of, remaining, cursor);
  result.dataset = dataset.with_folds(std::move(fold_of));
  return result;
}

SyntheticSplit split_synthetic_by_identity(const SequenceDataset& dataset, std::size_t n_val_identities,
                                           Rng& rng) {
  for (const auto& s : dataset)
    if (s.provenance != Provenance::Synthetic)
      throw ValidationError("identity split applies to synthetic datasets only");
  auto ids = dataset.identity_ids();
  if (n_val_identities >= ids.size() && n_val_identities > 0)
    throw ValidationError("validation identity count must be smaller than the identity count");

  std::shuffle(ids.begin(), ids.end(), rng);
  std::set<std::string> val_ids(ids.begin(), ids.begin() + static_cast<long>(n_val_identities));
  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    (val_ids.count(dataset[i].identity_id) ? val_idx : train_idx).push_back(i);

  SyntheticSplit split;
  split.train = dataset.subset(train_idx, "synthetic_train");
  split.val = dataset.subset(val_idx, "synthetic_val");
  split.val_identities.assign(val_ids.begin(), val_ids.end());
  return split;
}

MixedRatioSampler::MixedRatioSampler(const SequenceDataset& synth, double ratio) : synth_(&synth) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ValidationError("mixing ratio must lie in (0, 1]");
  identities_ = synth.identity_ids();
  std::map<std::string, std::size_t> id_index;
  for (std::size_t i = 0; i < identities_.size(); ++i) id_index[identities_[i]] = i;

  std::set<std::string> signal_set;
  for (const auto& s : synth) signal_set.insert(s.signal_id);
  std::map<std::string, std::size_t> sig_index;
  for (const auto& s : signal_set) sig_index.emplace(s, sig_index.size());

  groups_.assign(identities_.size(), std::vector<std::vector<std::size_t>>(signal_set.size()));
  for (std::size_t i = 0; i < synth.size(); ++i)
    groups_[id_index[synth[i].identity_id]][sig_index[synth[i].signal_id]].push_back(i);

  // 1e-9 guards against ratio * count landing just below an integer.
  n_identities_ = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(identities_.size()) + 1e-9));
}

std::size_t MixedRatioSampler::synthetic_per_epoch() const {
  if (groups_.empty()) return 0;
  return n_identities_ * groups_.front().size();
}

std::vector<std::size_t> MixedRatioSampler::sample_indices(Rng& rng) const {
  std::vector<std::size_t> order(identities_.size());
  std::iota(order.begin(), order.end(), 0);
  // Partial Fisher-Yates: the first n_identities_ entries are a uniform
  // sample without replacement.
  for (std::size_t i = 0; i < n_identities_; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, order.size() - 1);
    std::swap(order[i], order[d(rng)]);
  }
  std::vector<std::size_t> picked;
  picked.reserve(synthetic_per_epoch());
  for (std::size_t i = 0; i < n_identities_; ++i) {
    for (const auto& candidates : groups_[order[i]]) {
      if (candidates.empty()) continue;
      std::uniform_int_distribution<std::size_t> d(0, candidates.size() - 1);
      picked.push_back(candidates[d(rng)]);
    }
  }
  return picked;
}

std::vector<LabeledSequence> mixed_ratio_epoch(const std::vector<LabeledSequence>& real_train,
                                               const SequenceDataset& synth, double ratio, Rng& rng) {
  MixedRatioSampler sampler(synth, ratio);
  std::vector<LabeledSequence> epoch = real_train;
  for (auto i : sampler.sample_indices(rng)) epoch.push_back(synth[i]);
  std::shuffle(epoch.begin(), epoch.end(), rng);
  return epoch;
}

}  // namespace s2r::dataio
