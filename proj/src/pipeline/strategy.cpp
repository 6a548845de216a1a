#include <string>

#include "s2r/pipeline.hpp"

namespace s2r::pipeline {

std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::RealOnly: return "real-only";
    case StrategyKind::PretrainFinetune: return "pretrain-finetune";
    case StrategyKind::MixedRatio: return "mixed";
  }
  return "?";
}

std::string_view to_string(ModelKind k) { return k == ModelKind::Inception ? "inception" : "knn"; }

StrategyKind parse_strategy(std::string_view s) {
  if (s == "real-only") return StrategyKind::RealOnly;
  if (s == "pretrain-finetune") return StrategyKind::PretrainFinetune;
  if (s == "mixed") return StrategyKind::MixedRatio;
  throw ValidationError("unknown strategy '" + std::string(s) + "' (real-only | pretrain-finetune | mixed)");
}

ModelKind parse_model(std::string_view s) {
  if (s == "inception") return ModelKind::Inception;
  if (s == "knn") return ModelKind::Knn;
  throw ValidationError("unknown model '" + std::string(s) + "' (inception | knn)");
}

void StrategySpec::validate() const {
  if (kind == StrategyKind::MixedRatio && !ratio) throw ValidationError("mixed strategy requires a ratio");
  if (kind != StrategyKind::MixedRatio && ratio)
    throw ValidationError("ratio is only valid with the mixed strategy");
  if (ratio && !(*ratio > 0.0 && *ratio <= 1.0)) throw ValidationError("ratio must lie in (0, 1]");
  if (length < 1) throw ValidationError("sequence length L must be >= 1");
  if (model == ModelKind::Knn) {
    if (kind != StrategyKind::RealOnly) throw ValidationError("the knn model only supports the real-only strategy");
    if (knn_k == 0) throw ValidationError("knn k must be >= 1");
    if (dtw_band && *dtw_band == 0) throw ValidationError("dtw band must be >= 1");
    if (freeze_blocks != 0) throw ValidationError("--freeze has no meaning for the knn model");
    return;
  }
  if (batch_size == 0) throw ValidationError("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  model_config.validate();
  if (freeze_blocks > model_config.depth)
    throw ValidationError("cannot freeze " + std::to_string(freeze_blocks) + " of " +
                          std::to_string(model_config.depth) + " blocks");
  augment.validate();
}

nlohmann::json StrategySpec::to_json() const {
  nlohmann::json j = {{"strategy", to_string(kind)},
                      {"model", to_string(model)},
                      {"pretrain_epochs", pretrain_epochs},
                      {"finetune_epochs", finetune_epochs},
                      {"ratio", ratio ? nlohmann::json(*ratio) : nlohmann::json(nullptr)},
                      {"freeze_blocks", freeze_blocks},
                      {"length", length},
                      {"learning_rate", learning_rate},
                      {"batch_size", batch_size},
                      {"augment",
                       {{"scale_lo", augment.scale_lo},
                        {"scale_hi", augment.scale_hi},
                        {"noise_sigma", augment.noise_sigma},
                        {"max_time_shift", augment.max_time_shift},
                        {"channel_dropout_prob", augment.channel_dropout_prob}}},
                      {"model_config", model_config.to_json()},
                      {"n_val_identities", n_val_identities},
                      {"knn_k", knn_k},
                      {"dtw_band", dtw_band ? nlohmann::json(*dtw_band) : nlohmann::json(nullptr)}};
  return j;
}

StrategySpec StrategySpec::from_json(const nlohmann::json& j) {
  StrategySpec s;
  try {
    s.kind = parse_strategy(j.at("strategy").get<std::string>());
    s.model = parse_model(j.at("model").get<std::string>());
    s.pretrain_epochs = j.at("pretrain_epochs").get<std::size_t>();
    s.finetune_epochs = j.at("finetune_epochs").get<std::size_t>();
    s.ratio = j.at("ratio").is_null() ? std::nullopt : std::optional<double>(j.at("ratio").get<double>());
    s.freeze_blocks = j.at("freeze_blocks").get<std::size_t>();
    s.length = j.at("length").get<int>();
    s.learning_rate = j.at("learning_rate").get<double>();
    s.batch_size = j.at("batch_size").get<std::size_t>();
    const auto& a = j.at("augment");
    s.augment.scale_lo = a.at("scale_lo").get<double>();
    s.augment.scale_hi = a.at("scale_hi").get<double>();
    s.augment.noise_sigma = a.at("noise_sigma").get<double>();
    s.augment.max_time_shift = a.at("max_time_shift").get<int>();
    s.augment.channel_dropout_prob = a.at("channel_dropout_prob").get<double>();
    s.model_config = nn::ModelConfig::from_json(j.at("model_config"));
    s.n_val_identities = j.at("n_val_identities").get<std::size_t>();
    s.knn_k = j.at("knn_k").get<std::size_t>();
    s.dtw_band = j.at("dtw_band").is_null() ? std::nullopt
                                            : std::optional<std::size_t>(j.at("dtw_band").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed strategy config: ") + e.what());
  }
  s.validate();
  return s;
}

StrategySpec StrategySpec::real_only() {
  StrategySpec s;
  s.kind = StrategyKind::RealOnly;
  s.ratio.reset();
  return s;
}

StrategySpec StrategySpec::pretrain_finetune() {
  StrategySpec s;
  s.kind = StrategyKind::PretrainFinetune;
  s.ratio.reset();
  return s;
}

StrategySpec StrategySpec::mixed(double ratio) {
  StrategySpec s;
  s.kind = StrategyKind::MixedRatio;
  s.ratio = ratio;
  return s;
}

}  // namespace s2r::pipeline
