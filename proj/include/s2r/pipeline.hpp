#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "s2r/dataio.hpp"
#include "s2r/dataset.hpp"
#include "s2r/nn/inception.hpp"

namespace s2r::pipeline {

enum class StrategyKind { RealOnly, PretrainFinetune, MixedRatio };
enum class ModelKind { Inception, Knn };

std::string_view to_string(StrategyKind k);
std::string_view to_string(ModelKind k);
StrategyKind parse_strategy(std::string_view s);  // real-only | pretrain-finetune | mixed
ModelKind parse_model(std::string_view s);        // inception | knn

struct StrategySpec {
  StrategyKind kind = StrategyKind::MixedRatio;
  ModelKind model = ModelKind::Inception;
  std::size_t pretrain_epochs = 20;
  std::size_t finetune_epochs = 50;
  std::optional<double> ratio = 0.25;  // MixedRatio only
  std::size_t freeze_blocks = 0;
  int length = 64;
  double learning_rate = 1e-4;
  std::size_t batch_size = 8;
  dataio::AugmentConfig augment = dataio::AugmentConfig::training_default();
  nn::ModelConfig model_config;
  std::size_t n_val_identities = 5;
  std::size_t knn_k = 1;
  std::optional<std::size_t> dtw_band;

  void validate() const;
  nlohmann::json to_json() const;
  static StrategySpec from_json(const nlohmann::json& j);

  static StrategySpec real_only();
  static StrategySpec pretrain_finetune();
  static StrategySpec mixed(double ratio);
};

// ---------------------------------------------------------------------------
// Metrics

using Confusion = std::array<std::array<std::size_t, kClassCount>, kClassCount>;  // [true][predicted]

class UndefinedMetricsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// All values in percent. Per-class entries are empty when undefined
// (precision with no predictions, recall with no support); macro averages
// cover the defined classes only and raise the matching flag.
struct Metrics {
  std::size_t total = 0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::array<std::optional<double>, kClassCount> class_precision{};
  std::array<std::optional<double>, kClassCount> class_recall{};
  std::array<std::optional<double>, kClassCount> class_f1{};
  bool precision_undefined = false;
  bool recall_undefined = false;

  nlohmann::json to_json() const;
};

Metrics compute_metrics(const Confusion& confusion);

struct GroupAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double percent() const { return total ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct Prediction {
  std::string id;
  EmotionLabel truth;
  EmotionLabel predicted;
  Ethnicity ethnicity;
  Gender gender;
  int fold;
};

struct FoldSummary {
  int fold;
  Confusion confusion;
  Metrics metrics;
};

// Mean and sample standard deviation of per-fold metrics.
struct FoldAverage {
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
  double accuracy_std = 0.0, precision_std = 0.0, recall_std = 0.0, f1_std = 0.0;
};

struct EvalReport {
  Confusion confusion{};
  Metrics metrics;  // computed on the pooled confusion matrix
  std::optional<FoldAverage> fold_average;
  std::vector<FoldSummary> folds;
  std::map<std::string, GroupAccuracy> by_ethnicity;
  std::map<std::string, GroupAccuracy> by_gender;
  std::vector<Prediction> predictions;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;

  std::vector<int> test_folds() const;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  std::string to_text() const;
  std::string confusion_csv() const;
};

// Builds a single-fold report from raw predictions.
EvalReport make_report(std::vector<Prediction> predictions, const nlohmann::json& config, std::uint64_t seed);
// Pools fold reports: confusion matrices are summed, metrics are reported both
// on the pooled matrix and as the per-fold average.
EvalReport combine_reports(const std::vector<EvalReport>& folds);

// ---------------------------------------------------------------------------
// Training

struct TrainLog {
  std::vector<double> pretrain_loss;
  std::vector<double> pretrain_val_loss;  // logged only, never used for selection
  std::vector<double> train_loss;
  std::vector<std::size_t> epoch_sizes;   // sequences seen per fine-tune/mixed epoch
  std::set<std::string> trained_ids;      // every sequence id that entered a training batch
  std::set<std::string> pretrain_ids;
};

struct Pretrained {
  nn::InceptionTimeModel model;
  TrainLog log;
};

// Pretrains on the identity-split synthetic training set. Depends only on the
// spec, the synthetic dataset and the seed, so one result serves every fold.
Pretrained pretrain(const StrategySpec& spec, const SequenceDataset& synth, std::uint64_t seed);

struct RunResult {
  std::optional<nn::InceptionTimeModel> model;  // empty for KNN
  EvalReport report;
  TrainLog log;
};

// Trains on every real fold except `test_fold` and evaluates on it.
// `pretrained` may supply the result of pretrain(spec, synth, seed).
RunResult run_strategy(const StrategySpec& spec, const SequenceDataset& synth, const SequenceDataset& real,
                       int test_fold, std::uint64_t seed, const Pretrained* pretrained = nullptr);

struct CrossValidation {
  std::vector<EvalReport> folds;
  EvalReport combined;
  std::vector<TrainLog> logs;
  std::vector<nn::InceptionTimeModel> models;  // per fold, inception only
};

// Runs the strategy once per test fold (all folds when `test_folds` is empty)
// with up to `jobs` folds in flight. Results are ordered by fold.
CrossValidation cross_validate(const StrategySpec& spec, const SequenceDataset& synth, const SequenceDataset& real,
                               std::uint64_t seed, std::vector<int> test_folds = {}, std::size_t jobs = 1);

// Predicts with center windows and eval-mode normalisation.
std::vector<EmotionLabel> predict(nn::InceptionTimeModel& model, const std::vector<const LabeledSequence*>& seqs,
                                  int length);

nn::BatchTensor to_batch(const std::vector<LabeledSequence>& seqs);

// ---------------------------------------------------------------------------
// Fairness

struct FairnessRow {
  std::string variant;
  double accuracy;
  double delta;  // accuracy - base accuracy, percentage points
};

struct FairnessTable {
  std::vector<int> test_folds;
  std::string base;
  std::vector<FairnessRow> rows;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// All reports must cover the same test folds; `base` must be one of them.
FairnessTable fairness_report(const std::vector<std::pair<std::string, EvalReport>>& variants,
                              const std::string& base);

// ---------------------------------------------------------------------------
// Multi-seed summaries

struct SeedRow {
  std::string label;
  std::uint64_t seed;
  double accuracy, precision, recall, f1;
};

struct SeedSummary {
  std::vector<SeedRow> rows;
  // mean and sample std over rows; empty when there are no rows
  std::optional<SeedRow> mean, stddev;

  std::string to_text() const;
  nlohmann::json to_json() const;
};

SeedSummary summarize_seeds(const std::vector<std::pair<std::string, EvalReport>>& runs);

}  // namespace s2r::pipeline
