#include "s2r/dtwknn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace s2r::dtwknn {

double dtw_distance(SeriesView a, SeriesView b, const DTWConfig& cfg) {
  if (a.channels != b.channels || a.channels == 0)
    throw ValidationError("DTW operands must have the same channel count");
  const std::size_t n = a.length(), m = b.length();
  if (n == 0 || m == 0) throw ValidationError("DTW operands must have at least one frame");
  const std::size_t diff = n > m ? n - m : m - n;
  std::size_t reach = std::max(n, m);  // max |i - j| admitted
  if (cfg.band) {
    if (*cfg.band < 1) throw ValidationError("DTW band must be >= 1");
    reach = *cfg.band - 1;
    if (reach < diff)
      throw InfeasibleBandError("DTW band " + std::to_string(*cfg.band) +
                                " cannot connect series of lengths " + std::to_string(n) + " and " +
                                std::to_string(m));
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t C = a.channels;
  std::vector<double> prev(m, kInf), cur(m, kInf);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j_lo = i > reach ? i - reach : 0;
    const std::size_t j_hi = std::min(m - 1, i + reach);
    std::fill(cur.begin(), cur.end(), kInf);
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
      double sq = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        const double d = static_cast<double>(a.values[i * C + c]) - static_cast<double>(b.values[j * C + c]);
        sq += d * d;
      }
      const double cost = std::sqrt(sq);
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = cost + best;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

double dtw_distance(const LabeledSequence& a, const LabeledSequence& b, const DTWConfig& cfg) {
  return dtw_distance(view_of(a), view_of(b), cfg);
}

EmotionLabel vote(std::vector<Neighbor> candidates, std::size_t k) {
  if (candidates.empty()) throw ValidationError("KNN needs a non-empty training set");
  if (k < 1 || k > candidates.size()) throw ValidationError("KNN k must lie in [1, |train|]");
  // Ordering by (distance, label) makes the selected neighbourhood's label
  // multiset independent of the training-set order.
  std::sort(candidates.begin(), candidates.end(), [](const Neighbor& x, const Neighbor& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    return index_of(x.label) < index_of(y.label);
  });
  std::array<std::size_t, kClassCount> count{};
  std::array<double, kClassCount> summed{};
  for (std::size_t i = 0; i < k; ++i) {
    ++count[index_of(candidates[i].label)];
    summed[index_of(candidates[i].label)] += candidates[i].distance;
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < kClassCount; ++l) {
    if (count[l] > count[best] || (count[l] == count[best] && summed[l] < summed[best])) best = l;
  }
  return kAllLabels[best];
}

EmotionLabel knn_classify(const std::vector<LabeledSequence>& train, const LabeledSequence& query,
                          std::size_t k, const DTWConfig& cfg) {
  if (train.empty()) throw ValidationError("KNN needs a non-empty training set");
  if (k < 1 || k > train.size()) throw ValidationError("KNN k must lie in [1, |train|]");
  std::vector<Neighbor> candidates;
  candidates.reserve(train.size());
  for (const auto& t : train) candidates.push_back({dtw_distance(t, query, cfg), t.label});
  return vote(std::move(candidates), k);
}

}  // namespace s2r::dtwknn
