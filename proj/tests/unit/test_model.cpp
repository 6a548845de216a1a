#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "s2r/dataio.hpp"
#include "s2r/nn/checkpoint.hpp"
#include "s2r/nn/gradcheck.hpp"
#include "s2r/nn/inception.hpp"
#include "s2r/nn/optim.hpp"

using namespace s2r;
using namespace s2r::nn;
namespace fs = std::filesystem;

namespace {

BatchTensor random_batch(std::size_t b, std::size_t t, std::uint64_t seed, std::size_t channels = 14) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BatchTensor x(b, channels, t);
  for (auto& v : x.data()) v = u(rng);
  return x;
}

ModelConfig small_config() {
  auto cfg = reduced_config(3);
  cfg.use_residual = true;
  return cfg;
}

std::vector<std::vector<double>> snapshot(InceptionTimeModel& m) {
  std::vector<std::vector<double>> out;
  for (auto& p : m.parameters()) out.push_back(*p.value);
  return out;
}

fs::path temp_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("s2r_model_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Model, ForwardShapesAndProbabilities) {
  InceptionTimeModel model(ModelConfig{}, 3);
  for (std::size_t T : {25u, 64u}) {
    const auto out = model.forward(random_batch(4, T, 1), false);
    ASSERT_EQ(out.probs.rows, 4u);
    ASSERT_EQ(out.probs.cols, 3u);
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 3; ++c) s += out.probs(r, c);
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Model, SameSeedSameParameters) {
  InceptionTimeModel a(small_config(), 42), b(small_config(), 42), c(small_config(), 43);
  EXPECT_EQ(snapshot(a), snapshot(b));
  EXPECT_NE(snapshot(a), snapshot(c));
}

TEST(Model, ZeroInputStaysFinite) {
  InceptionTimeModel model(ModelConfig{}, 5);
  BatchTensor x(2, 14, 25, 0.0);
  const std::vector<std::size_t> y = {0, 2};
  const double loss = model.loss_and_gradients(x, y);
  EXPECT_TRUE(std::isfinite(loss));
  for (auto& p : model.parameters())
    if (p.grad) {
      for (double g : *p.grad) ASSERT_TRUE(std::isfinite(g)) << p.name;
    }
}

TEST(Model, InvalidConfigs) {
  auto cfg = small_config();
  cfg.depth = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = small_config();
  cfg.kernels = {};
  EXPECT_THROW(cfg.validate(), ValidationError);
  InceptionTimeModel model(small_config(), 1);
  EXPECT_THROW(model.forward(random_batch(2, 10, 1, 5), false), ValidationError);
}

TEST(Model, BackwardWithoutForwardIsContractError) {
  InceptionTimeModel model(small_config(), 1);
  const std::vector<std::size_t> y = {0};
  EXPECT_THROW(model.backward(ForwardResult{}, y), ContractError);
}

TEST(Model, FreezeBounds) {
  InceptionTimeModel model(ModelConfig{}, 1);
  EXPECT_NO_THROW(model.set_freeze(0));
  EXPECT_NO_THROW(model.set_freeze(6));
  EXPECT_THROW(model.set_freeze(7), ValidationError);
  auto updatable = [&] {
    std::size_t n = 0;
    for (auto& p : model.parameters())
      if (p.trainable && !model.block_frozen(p.block)) n += p.value->size();
    return n;
  };
  model.set_freeze(0);
  EXPECT_EQ(model.trainable_parameter_count(), 492547u);
  EXPECT_EQ(updatable(), 492547u);
  model.set_freeze(3);
  EXPECT_LT(updatable(), 492547u);
}

TEST(Model, FrozenBlocksAreBitStableUnderTraining) {
  InceptionTimeModel model(small_config(), 9);
  model.set_freeze(2);
  std::vector<std::vector<double>> before;
  std::vector<std::vector<double>> after;
  for (auto& p : model.parameters())
    if (model.block_frozen(p.block)) before.push_back(*p.value);
  Adam opt(AdamConfig{1e-2});
  const std::vector<std::size_t> y = {0, 1, 2, 1};
  for (int i = 0; i < 5; ++i) {
    model.loss_and_gradients(random_batch(4, 20, 100 + i), y);
    opt.step(model);
  }
  for (auto& p : model.parameters())
    if (model.block_frozen(p.block)) after.push_back(*p.value);
  ASSERT_FALSE(before.empty());
  EXPECT_EQ(before, after);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> w = {1.0, -2.0, 0.5}, g = {0.3, -4.0, 0.0};
  std::vector<std::vector<double>*> params = {&w};
  std::vector<const std::vector<double>*> grads = {&g};
  AdamState st;
  adam_step(params, grads, {false}, st, AdamConfig{});
  // m_hat = g, v_hat = g^2 on the first step
  EXPECT_NEAR(w[0], 1.0 - 1e-4 * 0.3 / (0.3 + 1e-8), 1e-15);
  EXPECT_NEAR(w[1], -2.0 + 1e-4 * 4.0 / (4.0 + 1e-8), 1e-15);
  EXPECT_EQ(w[2], 0.5);
}

TEST(Adam, UnitGradientStep) {
  std::vector<double> w = {0.0}, g = {1.0};
  std::vector<std::vector<double>*> params = {&w};
  std::vector<const std::vector<double>*> grads = {&g};
  AdamState st;
  adam_step(params, grads, {false}, st, AdamConfig{});
  EXPECT_NEAR(w[0], -1e-4 / (1.0 + 1e-8), 1e-18);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> w = {1.0, 2.0}, g = {0.0, 0.0};
  std::vector<std::vector<double>*> params = {&w};
  std::vector<const std::vector<double>*> grads = {&g};
  AdamState st;
  for (int i = 0; i < 3; ++i) adam_step(params, grads, {false}, st, AdamConfig{});
  EXPECT_EQ(w, (std::vector<double>{1.0, 2.0}));
}

TEST(Adam, FrozenTensorUntouched) {
  std::vector<double> a = {1.0}, b = {1.0}, g = {5.0};
  std::vector<std::vector<double>*> params = {&a, &b};
  std::vector<const std::vector<double>*> grads = {&g, &g};
  AdamState st;
  adam_step(params, grads, {true, false}, st, AdamConfig{});
  EXPECT_EQ(a[0], 1.0);
  EXPECT_NE(b[0], 1.0);
}

TEST(Adam, BadConfig) {
  EXPECT_THROW(Adam(AdamConfig{0.0}), ValidationError);
  EXPECT_THROW(Adam(AdamConfig{1e-3, 1.0}), ValidationError);
}

TEST(GradCheck, ReducedModelPasses) {
  InceptionTimeModel model(reduced_config(), 11);
  const std::vector<std::size_t> y = {0, 1, 2, 0};
  GradCheckOptions opt;
  opt.seed = 11;
  const auto r = grad_check(model, random_batch(4, 16, 11), y, opt);
  EXPECT_EQ(r.coordinates, 200u);
  EXPECT_TRUE(r.finite);
  EXPECT_LT(r.max_rel_error, 1e-4);
  EXPECT_TRUE(r.passed);
}

TEST(GradCheck, ResidualAndFreezePass) {
  auto cfg = reduced_config(6);
  InceptionTimeModel model(cfg, 12);
  model.set_freeze(1);
  const std::vector<std::size_t> y = {2, 1, 0};
  GradCheckOptions opt;
  opt.seed = 12;
  const auto r = grad_check(model, random_batch(3, 12, 12), y, opt);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
}

TEST(GradCheck, DetectsSignFlip) {
  InceptionTimeModel model(reduced_config(), 13);
  const std::vector<std::size_t> y = {0, 1, 2, 0};
  GradCheckOptions opt;
  opt.seed = 13;
  opt.tamper = [](InceptionTimeModel& m) {
    for (auto& p : m.parameters())
      if (p.grad)
        for (auto& g : *p.grad) g = -g;
  };
  const auto r = grad_check(model, random_batch(4, 16, 13), y, opt);
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.max_rel_error, 2.0, 1e-3);
}

TEST(Gap, CircularPaddingIsInvariantToCycleRepetition) {
  auto cfg = small_config();
  cfg.padding = Padding::Circular;
  InceptionTimeModel model(cfg, 21);
  // warm the running statistics so eval mode is non-trivial
  const std::vector<std::size_t> y = {0, 1};
  model.loss_and_gradients(random_batch(2, 12, 3), y);
  const auto once = random_batch(1, 12, 4);
  BatchTensor twice(1, 14, 24);
  for (std::size_t c = 0; c < 14; ++c)
    for (std::size_t t = 0; t < 24; ++t) twice.at(0, c, t) = once.at(0, c, t % 12);
  const auto a = model.forward(once, false), b = model.forward(twice, false);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a.logits(0, k), b.logits(0, k), 1e-9);
}

TEST(Checkpoint, RoundTripPreservesOutputs) {
  InceptionTimeModel model(small_config(), 31);
  const std::vector<std::size_t> y = {0, 1, 2};
  Adam opt;
  model.loss_and_gradients(random_batch(3, 15, 1), y);
  opt.step(model);
  model.set_freeze(1);
  model.history = {1.5, 1.2};
  model.epochs_trained = 2;
  const auto dir = temp_dir("rt");
  save_checkpoint(model, dir);
  auto loaded = load_checkpoint(dir);
  EXPECT_EQ(loaded.frozen_blocks(), 1u);
  EXPECT_EQ(loaded.history, model.history);
  EXPECT_EQ(loaded.epochs_trained, 2);
  EXPECT_EQ(loaded.seed(), 31u);
  const auto x = random_batch(2, 15, 2);
  const auto a = model.forward(x, false), b = loaded.forward(x, false);
  for (std::size_t i = 0; i < a.probs.data.size(); ++i) EXPECT_NEAR(a.probs.data[i], b.probs.data[i], 1e-5);
  fs::remove_all(dir);
}

TEST(Checkpoint, LoadErrors) {
  auto kind_of = [](const fs::path& d) {
    try {
      load_checkpoint(d);
    } catch (const dataio::LoadError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no error";
    return dataio::LoadError::Kind::Io;
  };
  const auto dir = temp_dir("err");
  EXPECT_EQ(kind_of(dir), dataio::LoadError::Kind::Io);

  InceptionTimeModel model(small_config(), 1);
  save_checkpoint(model, dir);
  const auto weights = dir / kWeightsFile;
  const auto size = fs::file_size(weights);
  fs::resize_file(weights, size - 4);
  EXPECT_EQ(kind_of(dir), dataio::LoadError::Kind::ChecksumMismatch);

  save_checkpoint(model, dir);
  {
    std::fstream f(weights, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    f.put('\x7f');
  }
  EXPECT_EQ(kind_of(dir), dataio::LoadError::Kind::ChecksumMismatch);

  save_checkpoint(model, dir);
  {
    std::ofstream f(dir / kModelFile, std::ios::trunc);
    f << "{ not json";
  }
  EXPECT_EQ(kind_of(dir), dataio::LoadError::Kind::CorruptManifest);
  fs::remove_all(dir);
}
