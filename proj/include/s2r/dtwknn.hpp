#pragma once

#include <optional>
#include <span>
#include <vector>

#include "s2r/types.hpp"

namespace s2r::dtwknn {

// Sakoe-Chiba band expressed as a window width in cells: cell (i, j) is
// reachable when |i - j| < band, so band = 1 admits only the diagonal.
struct DTWConfig {
  std::optional<std::size_t> band;
};

class InfeasibleBandError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Frame-major series with `channels` values per frame.
struct SeriesView {
  std::span<const float> values;
  std::size_t channels = kChannelCount;

  std::size_t length() const { return values.size() / channels; }
};

inline SeriesView view_of(const LabeledSequence& s) { return {s.values, kChannelCount}; }

// Symmetric-step DTW with Euclidean local cost.
double dtw_distance(SeriesView a, SeriesView b, const DTWConfig& cfg = {});
double dtw_distance(const LabeledSequence& a, const LabeledSequence& b, const DTWConfig& cfg = {});

struct Neighbor {
  double distance;
  EmotionLabel label;
};

// Majority vote over the k nearest; ties go to the smallest summed distance,
// then to label order.
EmotionLabel vote(std::vector<Neighbor> candidates, std::size_t k);

EmotionLabel knn_classify(const std::vector<LabeledSequence>& train, const LabeledSequence& query,
                          std::size_t k, const DTWConfig& cfg = {});

}  // namespace s2r::dtwknn
