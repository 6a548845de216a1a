#include <algorithm>
#include <future>
#include <numeric>

#include "s2r/dtwknn.hpp"
#include "s2r/nn/optim.hpp"
#include "s2r/pipeline.hpp"

namespace s2r::pipeline {

using dataio::LengthPolicy;
using dataio::WindowMode;

nn::BatchTensor to_batch(const std::vector<LabeledSequence>& seqs) {
  if (seqs.empty()) throw ValidationError("cannot batch zero sequences");
  const std::size_t t = seqs.front().length();
  nn::BatchTensor x(seqs.size(), kChannelCount, t);
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    if (seqs[b].length() != t) throw ValidationError("batched sequences must share one length");
    for (std::size_t f = 0; f < t; ++f)
      for (std::size_t c = 0; c < kChannelCount; ++c) x.at(b, c, f) = seqs[b].at(f, c);
  }
  return x;
}

namespace {

constexpr std::size_t kEvalBatch = 32;

double train_epoch(nn::InceptionTimeModel& model, nn::Adam& opt, const std::vector<const LabeledSequence*>& items,
                   const StrategySpec& spec, Rng& rng, std::set<std::string>& seen) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const LengthPolicy policy{spec.length, WindowMode::TrainRandomWindow};
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += spec.batch_size) {
    const std::size_t stop = std::min(order.size(), start + spec.batch_size);
    std::vector<LabeledSequence> batch;
    std::vector<std::size_t> labels;
    for (std::size_t i = start; i < stop; ++i) {
      const auto& s = *items[order[i]];
      batch.push_back(dataio::augment(dataio::normalize_length(s, policy, rng), spec.augment, rng));
      labels.push_back(index_of(s.label));
      seen.insert(s.id);
    }
    const double loss = model.loss_and_gradients(to_batch(batch), labels);
    opt.step(model);
    total += loss * static_cast<double>(batch.size());
  }
  return items.empty() ? 0.0 : total / static_cast<double>(items.size());
}

double eval_loss(nn::InceptionTimeModel& model, const SequenceDataset& ds, int length) {
  Rng unused(0);
  const LengthPolicy policy{length, WindowMode::TestCenterWindow};
  double total = 0.0;
  for (std::size_t start = 0; start < ds.size(); start += kEvalBatch) {
    const std::size_t stop = std::min(ds.size(), start + kEvalBatch);
    std::vector<LabeledSequence> batch;
    std::vector<std::size_t> labels;
    for (std::size_t i = start; i < stop; ++i) {
      batch.push_back(dataio::normalize_length(ds[i], policy, unused));
      labels.push_back(index_of(ds[i].label));
    }
    total += model.loss_only(to_batch(batch), labels, false) * static_cast<double>(batch.size());
  }
  return ds.empty() ? 0.0 : total / static_cast<double>(ds.size());
}

std::vector<const LabeledSequence*> pointers(const SequenceDataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<const LabeledSequence*> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(&ds[i]);
  return out;
}

}  // namespace

std::vector<EmotionLabel> predict(nn::InceptionTimeModel& model, const std::vector<const LabeledSequence*>& seqs,
                                  int length) {
  Rng unused(0);
  const LengthPolicy policy{length, WindowMode::TestCenterWindow};
  std::vector<EmotionLabel> out;
  for (std::size_t start = 0; start < seqs.size(); start += kEvalBatch) {
    const std::size_t stop = std::min(seqs.size(), start + kEvalBatch);
    std::vector<LabeledSequence> batch;
    for (std::size_t i = start; i < stop; ++i) batch.push_back(dataio::normalize_length(*seqs[i], policy, unused));
    const auto r = model.forward(to_batch(batch), false);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < r.probs.cols; ++c)
        if (r.probs(b, c) > r.probs(b, best)) best = c;
      out.push_back(kAllLabels[best]);
    }
  }
  return out;
}

Pretrained pretrain(const StrategySpec& spec, const SequenceDataset& synth, std::uint64_t seed) {
  spec.validate();
  if (synth.empty()) throw ValidationError("pretraining needs a synthetic dataset");
  Rng split_rng(derive_seed(seed, "synthetic-split"));
  const auto split = dataio::split_synthetic_by_identity(synth, spec.n_val_identities, split_rng);

  Pretrained p{nn::InceptionTimeModel(spec.model_config, derive_seed(seed, "model")), {}};
  p.model.set_freeze(spec.freeze_blocks);
  nn::Adam opt({.learning_rate = spec.learning_rate});
  Rng rng(derive_seed(seed, "pretrain"));
  std::vector<std::size_t> all(split.train.size());
  std::iota(all.begin(), all.end(), 0);
  const auto items = pointers(split.train, all);
  for (std::size_t e = 0; e < spec.pretrain_epochs; ++e) {
    const double loss = train_epoch(p.model, opt, items, spec, rng, p.log.pretrain_ids);
    p.log.pretrain_loss.push_back(loss);
    p.model.history.push_back(loss);
    if (!split.val.empty()) p.log.pretrain_val_loss.push_back(eval_loss(p.model, split.val, spec.length));
  }
  p.model.epochs_trained = static_cast<int>(spec.pretrain_epochs);
  return p;
}

RunResult run_strategy(const StrategySpec& spec, const SequenceDataset& synth, const SequenceDataset& real,
                       int test_fold, std::uint64_t seed, const Pretrained* pretrained) {
  spec.validate();
  if (!real.has_folds()) throw ValidationError("the real dataset has no fold assignment");
  if (test_fold < 0 || test_fold >= real.fold_count())
    throw ValidationError("test fold " + std::to_string(test_fold) + " is out of range");
  if (spec.kind != StrategyKind::RealOnly && synth.empty())
    throw ValidationError("strategy " + std::string(to_string(spec.kind)) + " needs a synthetic dataset");

  const auto train_idx = real.indices_not_in_fold(test_fold);
  const auto test_idx = real.indices_in_fold(test_fold);
  const auto test = pointers(real, test_idx);
  const std::uint64_t fold_seed = derive_seed(seed, "fold-" + std::to_string(test_fold));
  nlohmann::json config = spec.to_json();
  config["test_fold"] = test_fold;

  RunResult result;
  std::vector<EmotionLabel> predicted;
  if (spec.model == ModelKind::Knn) {
    std::vector<LabeledSequence> train;
    for (auto i : train_idx) {
      train.push_back(real[i]);
      result.log.trained_ids.insert(real[i].id);
    }
    const dtwknn::DTWConfig dtw{spec.dtw_band};
    for (const auto* q : test) predicted.push_back(dtwknn::knn_classify(train, *q, spec.knn_k, dtw));
  } else {
    nn::InceptionTimeModel model;
    if (spec.kind == StrategyKind::PretrainFinetune) {
      Pretrained local;
      if (!pretrained) {
        local = pretrain(spec, synth, seed);
        pretrained = &local;
      }
      model = pretrained->model;
      result.log.pretrain_loss = pretrained->log.pretrain_loss;
      result.log.pretrain_val_loss = pretrained->log.pretrain_val_loss;
      result.log.pretrain_ids = pretrained->log.pretrain_ids;
    } else {
      model = nn::InceptionTimeModel(spec.model_config, derive_seed(fold_seed, "model"));
    }
    model.set_freeze(spec.freeze_blocks);

    nn::Adam opt({.learning_rate = spec.learning_rate});
    Rng rng(derive_seed(fold_seed, "train"));
    const auto real_items = pointers(real, train_idx);
    std::optional<dataio::MixedRatioSampler> sampler;
    if (spec.kind == StrategyKind::MixedRatio) sampler.emplace(synth, *spec.ratio);
    for (std::size_t e = 0; e < spec.finetune_epochs; ++e) {
      auto items = real_items;
      if (sampler)
        for (auto i : sampler->sample_indices(rng)) items.push_back(&synth[i]);
      result.log.epoch_sizes.push_back(items.size());
      const double loss = train_epoch(model, opt, items, spec, rng, result.log.trained_ids);
      result.log.train_loss.push_back(loss);
      model.history.push_back(loss);
    }
    model.epochs_trained += static_cast<int>(spec.finetune_epochs);
    predicted = predict(model, test, spec.length);
    result.model = std::move(model);
  }

  std::vector<Prediction> preds;
  for (std::size_t i = 0; i < test.size(); ++i)
    preds.push_back({test[i]->id, test[i]->label, predicted[i], test[i]->ethnicity, test[i]->gender, test_fold});
  result.report = make_report(std::move(preds), config, seed);
  return result;
}

CrossValidation cross_validate(const StrategySpec& spec, const SequenceDataset& synth, const SequenceDataset& real,
                               std::uint64_t seed, std::vector<int> test_folds, std::size_t jobs) {
  spec.validate();
  if (!real.has_folds()) throw ValidationError("the real dataset has no fold assignment");
  if (test_folds.empty())
    for (int f = 0; f < real.fold_count(); ++f) test_folds.push_back(f);
  if (jobs == 0) jobs = 1;

  std::optional<Pretrained> pre;
  if (spec.model == ModelKind::Inception && spec.kind == StrategyKind::PretrainFinetune)
    pre = pretrain(spec, synth, seed);
  const Pretrained* pre_ptr = pre ? &*pre : nullptr;

  std::vector<RunResult> runs(test_folds.size());
  for (std::size_t start = 0; start < test_folds.size(); start += jobs) {
    const std::size_t stop = std::min(test_folds.size(), start + jobs);
    std::vector<std::future<RunResult>> pending;
    for (std::size_t i = start; i < stop; ++i)
      pending.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async, [&, i] {
        return run_strategy(spec, synth, real, test_folds[i], seed, pre_ptr);
      }));
    for (std::size_t i = start; i < stop; ++i) runs[i] = pending[i - start].get();
  }

  CrossValidation cv;
  for (auto& r : runs) {
    cv.folds.push_back(std::move(r.report));
    cv.logs.push_back(std::move(r.log));
    if (r.model) cv.models.push_back(std::move(*r.model));
  }
  cv.combined = combine_reports(cv.folds);
  cv.combined.config.erase("test_fold");
  return cv;
}

}  // namespace s2r::pipeline
