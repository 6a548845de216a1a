#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "s2r/signalgen.hpp"

using namespace s2r;
using namespace s2r::signalgen;

namespace {

SocialSignalSpec make_spec(std::vector<Keyframe> kf, EmotionLabel label = EmotionLabel::Confusion) {
  return {"test", label, std::move(kf)};
}

std::size_t ch(AU au) { return channel_index(au); }

}  // namespace

TEST(Channels, FixedOrderedSet) {
  const std::vector<std::string> expected = {"AU1",  "AU4",  "AU5",  "AU7",  "AU9",  "AU10", "AU15",
                                             "AU16", "AU17", "AU23", "AU25", "AU26", "AU61", "AU62"};
  ASSERT_EQ(kChannels.size(), expected.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < kChannels.size(); ++i) {
    EXPECT_EQ(kChannels[i].id, expected[i]);
    EXPECT_EQ(channel_index(kChannels[i].code), i);
    EXPECT_EQ(parse_au(kChannels[i].id), kChannels[i].code);
    seen.insert(std::string(kChannels[i].id));
  }
  EXPECT_EQ(seen.size(), kChannelCount);
  EXPECT_THROW(parse_au("AU99"), ValidationError);
}

TEST(Interpolate, SingleKeyframeHoldsEverywhere) {
  const auto t = interpolate_trajectory(make_spec({{0, AU::AU4, 0.8}}));
  for (int f = 0; f < kSignalFrames; ++f)
    for (std::size_t c = 0; c < kChannelCount; ++c) EXPECT_EQ(t.at(f, c), c == ch(AU::AU4) ? 0.8 : 0.0);
}

TEST(Interpolate, LinearMidpoint) {
  const auto t = interpolate_trajectory(make_spec({{0, AU::AU26, 0.0}, {24, AU::AU26, 1.0}}));
  EXPECT_DOUBLE_EQ(t.at(12, ch(AU::AU26)), 0.5);
  EXPECT_DOUBLE_EQ(t.at(6, ch(AU::AU26)), 0.25);
}

TEST(Interpolate, ZeroBeforeFirstHoldAfterLast) {
  const auto t = interpolate_trajectory(make_spec({{10, AU::AU7, 0.4}, {14, AU::AU7, 0.8}}));
  for (int f = 0; f < 10; ++f) EXPECT_EQ(t.at(f, ch(AU::AU7)), 0.0);
  EXPECT_DOUBLE_EQ(t.at(12, ch(AU::AU7)), 0.6);
  for (int f = 14; f < kSignalFrames; ++f) EXPECT_DOUBLE_EQ(t.at(f, ch(AU::AU7)), 0.8);
}

TEST(Interpolate, SideEyeSequence) {
  const auto t = interpolate_trajectory(make_spec({{0, AU::AU61, 0.0},
                                                   {6, AU::AU61, 1.0},
                                                   {12, AU::AU61, 0.0},
                                                   {12, AU::AU62, 0.0},
                                                   {18, AU::AU62, 1.0},
                                                   {24, AU::AU61, 1.0}}));
  int peak61 = 0, peak62 = 0;
  for (int f = 0; f < 19; ++f) {
    if (t.at(f, ch(AU::AU61)) > t.at(peak61, ch(AU::AU61))) peak61 = f;
    if (t.at(f, ch(AU::AU62)) > t.at(peak62, ch(AU::AU62))) peak62 = f;
  }
  EXPECT_EQ(peak61, 6);
  EXPECT_EQ(peak62, 18);
  EXPECT_DOUBLE_EQ(t.at(24, ch(AU::AU61)), 1.0);
  EXPECT_GT(t.at(24, ch(AU::AU61)), t.at(18, ch(AU::AU61)));
}

TEST(Interpolate, RejectsInvalidSpecs) {
  EXPECT_THROW(interpolate_trajectory(make_spec({{25, AU::AU4, 0.5}})), ValidationError);
  EXPECT_THROW(interpolate_trajectory(make_spec({{-1, AU::AU4, 0.5}})), ValidationError);
  EXPECT_THROW(interpolate_trajectory(make_spec({{3, AU::AU4, 1.5}})), ValidationError);
  EXPECT_THROW(interpolate_trajectory(make_spec({{3, AU::AU4, 0.0}})), ValidationError);
}

TEST(CanonicalSignals, CountsAndClosedSet) {
  const auto specs = canonical_signals();
  ASSERT_EQ(specs.size(), 21u);
  std::map<EmotionLabel, int> per;
  std::set<std::string> ids;
  for (const auto& s : specs) {
    ++per[s.label];
    ids.insert(s.id);
    EXPECT_NO_THROW(s.validate());
    for (const auto& k : s.keyframes) EXPECT_LT(channel_index(k.au), kChannelCount);
    const auto t = interpolate_trajectory(s);
    for (double v : t.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_EQ(ids.size(), 21u);
  for (auto l : kAllLabels) EXPECT_EQ(per[l], 7);
}

TEST(CanonicalSignals, ShippedAssetMatchesEmbeddedCopy) {
  const auto from_file = load_signals(S2R_ASSET_DIR "/social_signals.v1.json");
  EXPECT_EQ(from_file, canonical_signals());
  EXPECT_EQ(signals_from_json(signals_to_json(from_file)), from_file);
}

TEST(IdentitySuite, BalancedAndInRange) {
  const auto suite = generate_identity_suite(7);
  ASSERT_EQ(suite.size(), 24u);
  std::map<Ethnicity, int> eth;
  std::map<Gender, int> gen;
  std::map<std::pair<Ethnicity, Gender>, int> cell;
  std::set<std::string> ids;
  for (const auto& v : suite) {
    ++eth[v.ethnicity], ++gen[v.gender], ++cell[{v.ethnicity, v.gender}];
    ids.insert(v.id);
    for (double g : v.gain) EXPECT_TRUE(g >= kGainMin && g <= kGainMax);
    for (double b : v.baseline) EXPECT_TRUE(b >= kBaselineMin && b <= kBaselineMax);
    EXPECT_TRUE(v.tempo >= kTempoMin && v.tempo <= kTempoMax);
  }
  EXPECT_EQ(ids.size(), 24u);
  for (auto e : kAllEthnicities) EXPECT_EQ(eth[e], 6);
  EXPECT_EQ(gen[Gender::F], 12);
  EXPECT_EQ(gen[Gender::M], 12);
  for (const auto& [k, n] : cell) EXPECT_EQ(n, 3);
}

TEST(IdentitySuite, DeterministicPerSeed) {
  const auto a = generate_identity_suite(11), b = generate_identity_suite(11), c = generate_identity_suite(12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].gain, b[i].gain);
    EXPECT_EQ(a[i].tempo, b[i].tempo);
  }
  EXPECT_NE(a[0].gain, c[0].gain);
}

TEST(AngleGrid, NineDistinctIncludingFrontal) {
  const auto g = angle_grid();
  ASSERT_EQ(g.size(), 9u);
  std::set<std::pair<double, double>> s;
  for (const auto& a : g) s.insert({a.h_rot, a.v_rot});
  EXPECT_EQ(s.size(), 9u);
  EXPECT_TRUE(s.count({0.0, 0.0}));
  EXPECT_TRUE(s.count({-40.0, 30.0}));
  EXPECT_TRUE(s.count({-20.0, 15.0}));
}

TEST(Render, NeutralFrontalCleanIsIdentity) {
  Rng rng(3);
  for (const auto& spec : canonical_signals()) {
    const auto t = interpolate_trajectory(spec);
    const auto s = render(VirtualIdentity::neutral(), spec, {0, 0}, NoiseConfig{}, rng);
    ASSERT_EQ(s.length(), 25u);
    for (int f = 0; f < kSignalFrames; ++f)
      for (std::size_t c = 0; c < kChannelCount; ++c)
        EXPECT_EQ(s.at(f, c), static_cast<float>(t.at(f, c))) << spec.id << " f=" << f << " c=" << c;
    EXPECT_EQ(s.label, spec.label);
    EXPECT_EQ(s.signal_id, spec.id);
    EXPECT_EQ(s.provenance, Provenance::Synthetic);
  }
}

TEST(Render, SameSeedSameSequence) {
  const auto suite = generate_identity_suite(1);
  const auto spec = canonical_signals()[4];
  Rng a(99), b(99);
  const auto x = render(suite[5], spec, {20, -15}, NoiseConfig::synthetic_default(), a);
  const auto y = render(suite[5], spec, {20, -15}, NoiseConfig::synthetic_default(), b);
  EXPECT_EQ(x.values, y.values);
  for (float v : x.values) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(Render, ObliqueViewNeverExceedsFrontalPeak) {
  Rng rng(0);
  for (const auto& spec : canonical_signals()) {
    const auto front = render(VirtualIdentity::neutral(), spec, {0, 0}, NoiseConfig{}, rng);
    const auto side = render(VirtualIdentity::neutral(), spec, {40, 30}, NoiseConfig{}, rng);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      float mf = 0, ms = 0;
      for (std::size_t f = 0; f < front.length(); ++f) {
        mf = std::max(mf, front.at(f, c));
        ms = std::max(ms, side.at(f, c));
      }
      EXPECT_LE(ms, mf) << spec.id << " channel " << c;
    }
  }
}

TEST(Render, AttenuationMonotoneInHorizontalRotation) {
  Rng rng(0);
  const auto specs = canonical_signals();
  for (double v : {-30.0, -15.0, 0.0, 15.0, 30.0}) {
    for (double sign : {-1.0, 1.0}) {
      for (double h = 0; h < 85; h += 5) {
        const auto a0 = attenuation({sign * h, v});
        const auto a1 = attenuation({sign * (h + 5), v});
        for (std::size_t c = 0; c < kChannelCount; ++c) {
          EXPECT_LE(a1[c], a0[c]);
          EXPECT_GT(a1[c], 0.0);
        }
      }
    }
  }
  // the same ordering holds frame by frame on rendered sequences
  for (const auto& spec : specs) {
    const auto near = render(VirtualIdentity::neutral(), spec, {20, 15}, NoiseConfig{}, rng);
    const auto far = render(VirtualIdentity::neutral(), spec, {40, 15}, NoiseConfig{}, rng);
    for (std::size_t i = 0; i < near.values.size(); ++i) EXPECT_LE(far.values[i], near.values[i]);
  }
}

TEST(SyntheticDataset, StandardCountsAndUniqueKeys) {
  const auto suite = generate_identity_suite(5);
  const auto ds =
      generate_synthetic_dataset(suite, canonical_signals(), angle_grid(), NoiseConfig::synthetic_default(), 5);
  ASSERT_EQ(ds.size(), 4536u);
  for (auto l : kAllLabels) EXPECT_EQ(ds.count_label(l), 1512u);
  std::set<std::tuple<std::string, std::string, double, double>> keys;
  std::set<std::string> ids;
  for (const auto& s : ds) {
    keys.insert({s.identity_id, s.signal_id, s.angle.h_rot, s.angle.v_rot});
    ids.insert(s.id);
    EXPECT_EQ(s.length(), 25u);
  }
  EXPECT_EQ(keys.size(), 4536u);
  EXPECT_EQ(ids.size(), 4536u);
  EXPECT_EQ(ds.manifest().seed, 5u);
  EXPECT_EQ(ds.manifest().kind, "synthetic");
}

TEST(SyntheticDataset, OneIdentityProduct) {
  const auto suite = generate_identity_suite(5);
  const auto ds = generate_synthetic_dataset({suite[0]}, canonical_signals(), angle_grid(), NoiseConfig{}, 1);
  EXPECT_EQ(ds.size(), 189u);
}

TEST(SyntheticDataset, EmptyInputsRejected) {
  const auto suite = generate_identity_suite(5);
  EXPECT_THROW(generate_synthetic_dataset({}, canonical_signals(), angle_grid(), NoiseConfig{}, 1), ValidationError);
  EXPECT_THROW(generate_synthetic_dataset(suite, {}, angle_grid(), NoiseConfig{}, 1), ValidationError);
  EXPECT_THROW(generate_synthetic_dataset(suite, canonical_signals(), {}, NoiseConfig{}, 1), ValidationError);
}

TEST(SurrogateReal, ClassAndDemographicCounts) {
  const auto ds = generate_surrogate_real(5, NoiseConfig::real_default(), 17, canonical_signals());
  ASSERT_EQ(ds.size(), 123u);
  for (auto l : kAllLabels) EXPECT_EQ(ds.count_label(l), 41u);
  std::size_t minority = 0;
  std::set<std::string> identities;
  for (const auto& s : ds) {
    minority += s.ethnicity != Ethnicity::Caucasian;
    identities.insert(s.identity_id);
    EXPECT_EQ(s.provenance, Provenance::SurrogateReal);
    EXPECT_GE(s.length(), 20u);
    EXPECT_LE(s.length(), 75u);
    EXPECT_NO_THROW(s.validate());
  }
  EXPECT_EQ(minority, 26u);
  EXPECT_EQ(identities.size(), 20u);
  for (const auto& v : generate_identity_suite(5)) EXPECT_FALSE(identities.count(v.id));
}

TEST(SurrogateReal, DeterministicAndRejectsMildNoise) {
  const auto a = generate_surrogate_real(5, NoiseConfig::real_default(), 17, canonical_signals());
  const auto b = generate_surrogate_real(5, NoiseConfig::real_default(), 17, canonical_signals());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
  EXPECT_THROW(generate_surrogate_real(5, NoiseConfig::synthetic_default(), 17, canonical_signals()),
               ValidationError);
}

TEST(NoiseConfig, Validation) {
  EXPECT_THROW((NoiseConfig{-0.1, 0, 0, 0}.validate()), ValidationError);
  EXPECT_THROW((NoiseConfig{0, 0, 0, 1.5}.validate()), ValidationError);
  EXPECT_NO_THROW(NoiseConfig::real_default().validate());
}
