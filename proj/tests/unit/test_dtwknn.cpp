#include <gtest/gtest.h>

#include "../oracles.hpp"
#include "s2r/dtwknn.hpp"

using namespace s2r;
using namespace s2r::dtwknn;

namespace {

std::vector<float> to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

double dtw1(const std::vector<double>& a, const std::vector<double>& b, DTWConfig cfg = {}) {
  const auto fa = to_float(a), fb = to_float(b);
  return dtw_distance(SeriesView{fa, 1}, SeriesView{fb, 1}, cfg);
}

LabeledSequence constant_seq(float v, EmotionLabel label, std::size_t T = 5) {
  LabeledSequence s;
  s.values.assign(T * kChannelCount, v);
  s.label = label;
  return s;
}

}  // namespace

TEST(Dtw, ZeroSelfDistance) {
  Rng rng(1);
  std::uniform_real_distribution<float> u(0, 1);
  std::vector<float> a(7 * kChannelCount);
  for (auto& v : a) v = u(rng);
  EXPECT_EQ(dtw_distance(SeriesView{a}, SeriesView{a}), 0.0);
}

TEST(Dtw, RepeatedFrameAlignsAtZeroCost) { EXPECT_EQ(dtw1({1, 2, 3}, {1, 2, 2, 3}), 0.0); }

TEST(Dtw, SingleCell) { EXPECT_EQ(dtw1({0}, {3}), 3.0); }

TEST(Dtw, MatchesEnumerationOnSmallInstances) {
  Rng rng(7);
  std::uniform_int_distribution<int> len(1, 6);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t ch = 1 + trial % 3;
    std::vector<double> a(len(rng) * ch), b(len(rng) * ch);
    for (auto& v : a) v = static_cast<float>(g(rng));
    for (auto& v : b) v = static_cast<float>(g(rng));
    const auto fa = to_float(a), fb = to_float(b);
    const double dp = dtw_distance(SeriesView{fa, ch}, SeriesView{fb, ch});
    const double brute = oracle::dtw_by_enumeration(a, b, ch);
    EXPECT_LE(std::abs(dp - brute), 1e-12 * std::max(1.0, brute));
  }
}

TEST(Dtw, SymmetricAndNonNegative) {
  Rng rng(3);
  std::uniform_real_distribution<float> u(0, 1);
  for (int i = 0; i < 50; ++i) {
    std::vector<float> a((3 + i % 5) * kChannelCount), b((2 + i % 7) * kChannelCount);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    const double ab = dtw_distance(SeriesView{a}, SeriesView{b}), ba = dtw_distance(SeriesView{b}, SeriesView{a});
    EXPECT_EQ(ab, ba);
    EXPECT_GE(ab, 0.0);
  }
}

TEST(Dtw, UnitBandIsDiagonalSum) {
  Rng rng(4);
  std::uniform_real_distribution<float> u(0, 1);
  std::vector<float> a(9 * kChannelCount), b(9 * kChannelCount);
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = u(rng);
  double expected = 0.0;
  for (std::size_t t = 0; t < 9; ++t) {
    double s = 0.0;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const double d = static_cast<double>(a[t * kChannelCount + c]) - b[t * kChannelCount + c];
      s += d * d;
    }
    expected += std::sqrt(s);
  }
  EXPECT_NEAR(dtw_distance(SeriesView{a}, SeriesView{b}, {1}), expected, 1e-12);
}

TEST(Dtw, BandedMatchesBandedEnumeration) {
  Rng rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(6), b(5);
    for (auto& v : a) v = static_cast<float>(g(rng));
    for (auto& v : b) v = static_cast<float>(g(rng));
    for (std::size_t band = 2; band <= 6; ++band)
      EXPECT_NEAR(dtw1(a, b, {band}), oracle::dtw_by_enumeration(a, b, 1, band), 1e-12);
  }
}

TEST(Dtw, InfeasibleBand) {
  EXPECT_THROW(dtw1({1, 2, 3, 4, 5}, {1, 2}, {2}), InfeasibleBandError);
  EXPECT_THROW(dtw1({1, 2}, {1}, {1}), InfeasibleBandError);
  EXPECT_NO_THROW(dtw1({1, 2, 3, 4, 5}, {1, 2}, {4}));
  EXPECT_THROW(dtw1({1}, {1}, {0}), ValidationError);
}

TEST(Dtw, RejectsEmptyOrMismatchedChannels) {
  std::vector<float> empty, a(3 * 14);
  EXPECT_THROW(dtw_distance(SeriesView{empty}, SeriesView{a}), ValidationError);
  std::vector<float> b(4);
  EXPECT_THROW(dtw_distance(SeriesView{a, 14}, SeriesView{b, 2}), ValidationError);
}

TEST(Vote, Majority) {
  EXPECT_EQ(vote({{0.5, EmotionLabel::Anger}, {0.7, EmotionLabel::Anger}, {0.1, EmotionLabel::Disgust}}, 3),
            EmotionLabel::Anger);
}

TEST(Vote, TieBrokenBySummedDistance) {
  EXPECT_EQ(vote({{1.0, EmotionLabel::Anger}, {2.0, EmotionLabel::Disgust}}, 2), EmotionLabel::Anger);
  EXPECT_EQ(vote({{2.0, EmotionLabel::Anger}, {1.0, EmotionLabel::Disgust}}, 2), EmotionLabel::Disgust);
}

TEST(Vote, FullTieFallsBackToLabelOrder) {
  EXPECT_EQ(vote({{1.0, EmotionLabel::Disgust}, {1.0, EmotionLabel::Anger}}, 2), EmotionLabel::Anger);
}

TEST(Knn, IdenticalQueryTakesItsLabel) {
  std::vector<LabeledSequence> train = {constant_seq(0.1f, EmotionLabel::Confusion),
                                        constant_seq(0.5f, EmotionLabel::Anger),
                                        constant_seq(0.9f, EmotionLabel::Disgust)};
  for (const auto& s : train) EXPECT_EQ(knn_classify(train, s, 1), s.label);
}

TEST(Knn, OrderIndependent) {
  std::vector<LabeledSequence> train = {constant_seq(0.4f, EmotionLabel::Confusion),
                                        constant_seq(0.6f, EmotionLabel::Anger)};
  const auto q = constant_seq(0.5f, EmotionLabel::Disgust);
  const auto a = knn_classify(train, q, 1);
  std::reverse(train.begin(), train.end());
  EXPECT_EQ(knn_classify(train, q, 1), a);
  EXPECT_EQ(a, EmotionLabel::Confusion);
}

TEST(Knn, Errors) {
  const auto q = constant_seq(0.5f, EmotionLabel::Anger);
  EXPECT_THROW(knn_classify({}, q, 1), ValidationError);
  EXPECT_THROW(knn_classify({q}, q, 0), ValidationError);
  EXPECT_THROW(knn_classify({q}, q, 2), ValidationError);
}
