#include "s2r/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "s2r/dataio.hpp"
#include "s2r/dtwknn.hpp"
#include "s2r/nn/checkpoint.hpp"
#include "s2r/nn/gradcheck.hpp"
#include "s2r/pipeline.hpp"
#include "s2r/signalgen.hpp"

namespace s2r::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kConfigFile = "config.json";
constexpr const char* kReportFile = "report.json";
constexpr int kFolds = 5;

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw ValidationError("cannot read " + p.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ValidationError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

// Refuses to reuse a non-empty directory unless forced; forced reuse starts
// from an empty directory so no stale artifacts survive.
void prepare_out_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ValidationError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw ValidationError(dir.string() + " is not empty (use --force to overwrite)");
      fs::remove_all(dir);
    }
  }
  fs::create_directories(dir);
}

std::string fold_dir(int k) { return "fold-" + std::to_string(k); }

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::string out;
  std::string config;
  std::uint64_t seed = 1;
  std::size_t identities = 24;
  bool force = false;
};

int cmd_generate(const GenerateArgs& a, const CLI::App& sub, std::ostream& out) {
  std::uint64_t seed = a.seed;
  std::size_t identities = a.identities;
  auto syn_noise = signalgen::NoiseConfig::synthetic_default();
  auto real_noise = signalgen::NoiseConfig::real_default();
  if (!a.config.empty()) {
    const json c = read_json(a.config);
    if (c.contains("seed") && !sub.count("--seed")) seed = c["seed"].get<std::uint64_t>();
    if (c.contains("identities") && !sub.count("--identities")) identities = c["identities"].get<std::size_t>();
    if (c.contains("synthetic_noise")) syn_noise = signalgen::NoiseConfig::from_json(c["synthetic_noise"]);
    if (c.contains("real_noise")) real_noise = signalgen::NoiseConfig::from_json(c["real_noise"]);
  }
  if (identities < 1 || identities > 24) throw ValidationError("--identities must lie in [1, 24]");
  syn_noise.validate();
  real_noise.validate();

  const fs::path dir(a.out);
  prepare_out_dir(dir, a.force);

  auto suite = signalgen::generate_identity_suite(seed);
  suite.resize(identities);
  const auto signals = signalgen::canonical_signals();
  const auto synth = signalgen::generate_synthetic_dataset(suite, signals, signalgen::angle_grid(), syn_noise, seed);
  const auto real = signalgen::generate_surrogate_real(seed, real_noise, seed, signals);
  Rng fold_rng(derive_seed(seed, "folds"));
  const auto folds = dataio::assign_folds(real, kFolds, true, fold_rng);

  dataio::save_dataset(synth, dir / "synthetic");
  dataio::save_dataset(folds.dataset, dir / "real");

  json cfg = {{"command", "generate"},
              {"seed", seed},
              {"identities", identities},
              {"synthetic_noise", syn_noise.to_json()},
              {"real_noise", real_noise.to_json()},
              {"folds", {{"k", kFolds},
                         {"minority_fold", true},
                         {"minority_in_fold0", folds.minority_in_fold0},
                         {"minority_overflow", folds.minority_overflow}}},
              {"counts", {{"synthetic", synth.size()}, {"real", real.size()}}}};
  write_json(dir / kConfigFile, cfg);

  out << "synthetic: " << synth.size() << " sequences (" << identities << " identities x " << signals.size()
      << " signals x " << signalgen::angle_grid().size() << " angles)\n";
  out << "real:      " << real.size() << " sequences";
  for (auto l : kAllLabels) out << ", " << to_string(l) << " " << real.count_label(l);
  out << "\n";
  out << "fold 0:    " << folds.minority_in_fold0 << " non-Caucasian sequences, " << folds.minority_overflow
      << " placed elsewhere\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data, out, config, label;
  std::uint64_t seed = 1;
  std::string strategy = "mixed", model = "inception";
  double ratio = 0.25;
  int length = 64;
  std::size_t freeze = 0, knn_k = 1, dtw_band = 0, jobs = 1;
  std::size_t pretrain_epochs = 20, finetune_epochs = 50, batch_size = 8;
  double lr = 1e-4;
  std::vector<int> folds;
  bool force = false;
};

std::string default_label(const pipeline::StrategySpec& s) {
  std::string l(pipeline::to_string(s.kind));
  if (s.ratio) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "-r%g", *s.ratio);
    l += buf;
  }
  if (s.model == pipeline::ModelKind::Knn) return l + "-knn";
  return l + "-L" + std::to_string(s.length) + "-freeze" + std::to_string(s.freeze_blocks);
}

pipeline::StrategySpec resolve_spec(const TrainArgs& a, const CLI::App& sub, const json& file_cfg,
                                    std::uint64_t& seed) {
  pipeline::StrategySpec s;
  if (file_cfg.contains("strategy")) s = pipeline::StrategySpec::from_json(file_cfg["strategy"]);
  if (file_cfg.contains("seed") && !sub.count("--seed")) seed = file_cfg["seed"].get<std::uint64_t>();

  const bool from_file = file_cfg.contains("strategy");
  auto set = [&](const char* flag) { return !from_file || sub.count(flag) > 0; };

  if (set("--strategy")) {
    const auto kind = pipeline::parse_strategy(a.strategy);
    if (kind != s.kind || !from_file) {
      // switching strategy resets the ratio to what that strategy expects
      s.kind = kind;
      s.ratio = kind == pipeline::StrategyKind::MixedRatio ? std::optional<double>(a.ratio) : std::nullopt;
    }
  }
  if (sub.count("--ratio")) {
    if (s.kind != pipeline::StrategyKind::MixedRatio)
      throw ValidationError("--ratio only applies to --strategy mixed");
    s.ratio = a.ratio;
  }
  if (set("--model")) s.model = pipeline::parse_model(a.model);
  if (set("--len")) s.length = a.length;
  if (set("--freeze")) s.freeze_blocks = a.freeze;
  if (set("--knn-k")) s.knn_k = a.knn_k;
  if (sub.count("--dtw-band")) s.dtw_band = a.dtw_band;
  if (set("--pretrain-epochs")) s.pretrain_epochs = a.pretrain_epochs;
  if (set("--finetune-epochs")) s.finetune_epochs = a.finetune_epochs;
  if (set("--batch-size")) s.batch_size = a.batch_size;
  if (set("--lr")) s.learning_rate = a.lr;
  s.validate();
  return s;
}

json log_json(const pipeline::TrainLog& l) {
  return {{"pretrain_loss", l.pretrain_loss},
          {"pretrain_val_loss", l.pretrain_val_loss},
          {"train_loss", l.train_loss},
          {"epoch_sizes", l.epoch_sizes},
          {"trained_sequences", l.trained_ids.size()},
          {"pretrain_sequences", l.pretrain_ids.size()}};
}

void write_report(const fs::path& dir, const pipeline::EvalReport& r) {
  write_json(dir / kReportFile, r.to_json());
  write_text(dir / "report.txt", r.to_text());
  write_text(dir / "confusion.csv", r.confusion_csv());
}

SequenceDataset load_required(const fs::path& dir, const char* what) {
  if (!fs::exists(dir / "manifest.json"))
    throw ValidationError(std::string("missing ") + what + " dataset at " + dir.string());
  return dataio::load_dataset(dir);
}

int cmd_train(const TrainArgs& a, const CLI::App& sub, std::ostream& out) {
  const json file_cfg = a.config.empty() ? json::object() : read_json(a.config);
  std::uint64_t seed = a.seed;
  const auto spec = resolve_spec(a, sub, file_cfg, seed);
  std::vector<int> test_folds = a.folds;
  if (test_folds.empty() && file_cfg.contains("test_folds")) test_folds = file_cfg["test_folds"].get<std::vector<int>>();
  if (a.jobs < 1) throw ValidationError("--jobs must be >= 1");

  const fs::path data(a.data);
  const auto real = load_required(data / "real", "real");
  for (int f : test_folds)
    if (f < 0 || f >= real.fold_count()) throw ValidationError("test fold " + std::to_string(f) + " out of range");
  SequenceDataset synth;
  if (spec.kind != pipeline::StrategyKind::RealOnly) synth = load_required(data / "synthetic", "synthetic");

  const fs::path dir(a.out);
  prepare_out_dir(dir, a.force);
  const std::string label = a.label.empty() ? file_cfg.value("label", default_label(spec)) : a.label;
  if (test_folds.empty())
    for (int f = 0; f < real.fold_count(); ++f) test_folds.push_back(f);

  json cfg = {{"command", "train"},       {"label", label},
              {"seed", seed},             {"data", fs::absolute(data).lexically_normal().string()},
              {"strategy", spec.to_json()}, {"test_folds", test_folds},
              {"jobs", a.jobs}};
  write_json(dir / kConfigFile, cfg);

  const auto cv = pipeline::cross_validate(spec, synth, real, seed, test_folds, a.jobs);

  json logs = json::object();
  for (std::size_t i = 0; i < cv.folds.size(); ++i) {
    const fs::path fd = dir / fold_dir(test_folds[i]);
    fs::create_directories(fd);
    write_report(fd, cv.folds[i]);
    if (i < cv.models.size()) {
      auto model = cv.models[i];
      nn::save_checkpoint(model, fd);
    }
    logs[fold_dir(test_folds[i])] = log_json(cv.logs[i]);
  }
  write_json(dir / "log.json", logs);
  auto combined = cv.combined;
  combined.config["label"] = label;
  write_report(dir, combined);

  out << label << "  seed " << seed << "\n" << combined.to_text();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string run, data, out;
  bool force = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const fs::path run(a.run);
  const json cfg = read_json(run / kConfigFile);
  if (cfg.value("command", "") != "train") throw ValidationError(run.string() + " is not a train run");
  const auto spec = pipeline::StrategySpec::from_json(cfg.at("strategy"));
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const fs::path data = a.data.empty() ? fs::path(cfg.at("data").get<std::string>()) : fs::path(a.data);
  const auto real = load_required(data / "real", "real");

  std::vector<pipeline::EvalReport> folds;
  for (int f : cfg.at("test_folds").get<std::vector<int>>()) {
    if (f < 0 || f >= real.fold_count()) throw ValidationError("run references fold " + std::to_string(f));
    std::vector<const LabeledSequence*> test;
    for (auto i : real.indices_in_fold(f)) test.push_back(&real[i]);
    std::vector<EmotionLabel> predicted;
    if (spec.model == pipeline::ModelKind::Knn) {
      std::vector<LabeledSequence> train;
      for (auto i : real.indices_not_in_fold(f)) train.push_back(real[i]);
      for (const auto* q : test) predicted.push_back(dtwknn::knn_classify(train, *q, spec.knn_k, {spec.dtw_band}));
    } else {
      auto model = nn::load_checkpoint(run / fold_dir(f));
      predicted = pipeline::predict(model, test, spec.length);
    }
    std::vector<pipeline::Prediction> preds;
    for (std::size_t i = 0; i < test.size(); ++i)
      preds.push_back({test[i]->id, test[i]->label, predicted[i], test[i]->ethnicity, test[i]->gender, f});
    json fold_cfg = spec.to_json();
    fold_cfg["test_fold"] = f;
    folds.push_back(pipeline::make_report(std::move(preds), fold_cfg, seed));
  }
  auto combined = pipeline::combine_reports(folds);
  combined.config["label"] = cfg.value("label", "");

  out << combined.to_text();
  if (fs::exists(run / kReportFile)) {
    const auto stored = pipeline::EvalReport::from_json(read_json(run / kReportFile));
    const bool same = stored.confusion == combined.confusion;
    out << "stored report: " << (same ? "reproduced" : "DIFFERS") << "\n";
  }
  if (!a.out.empty()) {
    const fs::path dir(a.out);
    prepare_out_dir(dir, a.force);
    write_json(dir / kConfigFile, {{"command", "eval"}, {"run", fs::absolute(run).lexically_normal().string()},
                                   {"data", fs::absolute(data).lexically_normal().string()}});
    write_report(dir, combined);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out, base;
  bool force = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  std::vector<std::pair<std::string, pipeline::EvalReport>> runs;
  for (const auto& r : a.runs) {
    const json cfg = read_json(fs::path(r) / kConfigFile);
    auto rep = pipeline::EvalReport::from_json(read_json(fs::path(r) / kReportFile));
    runs.emplace_back(cfg.value("label", fs::path(r).filename().string()), std::move(rep));
  }
  if (runs.empty()) throw ValidationError("report needs at least one run directory");

  const auto folds = runs.front().second.test_folds();
  for (const auto& [label, rep] : runs)
    if (rep.test_folds() != folds)
      throw ValidationError("run '" + label + "' covers different test folds than '" + runs.front().first + "'");

  // Seeds of one variant pool into a single report.
  std::vector<std::string> order;
  std::map<std::string, std::vector<pipeline::EvalReport>> by_label;
  for (const auto& [label, rep] : runs) {
    if (!by_label.count(label)) order.push_back(label);
    by_label[label].push_back(rep);
  }
  std::vector<std::pair<std::string, pipeline::EvalReport>> variants;
  for (const auto& l : order) variants.emplace_back(l, pipeline::combine_reports(by_label[l]));

  std::ostringstream text;
  const auto seeds = pipeline::summarize_seeds(runs);
  text << seeds.to_text();
  json summary = {{"runs", seeds.to_json()}};

  std::optional<pipeline::FairnessTable> fairness;
  if (variants.size() > 1) {
    const std::string base = a.base.empty() ? order.front() : a.base;
    fairness = pipeline::fairness_report(variants, base);
    text << "\n" << fairness->to_text();
    summary["fairness"] = fairness->to_json();
  } else if (!a.base.empty() && a.base != order.front()) {
    throw ValidationError("base '" + a.base + "' is not among the runs");
  }
  for (const auto& [label, rep] : variants) {
    text << "\n" << label << " (pooled over " << by_label[label].size() << " run(s))\n" << rep.to_text();
    summary["variants"][label] = rep.metrics.to_json();
  }
  out << text.str();

  if (!a.out.empty()) {
    const fs::path dir(a.out);
    prepare_out_dir(dir, a.force);
    json runs_cfg = json::array();
    for (const auto& r : a.runs) runs_cfg.push_back(fs::absolute(r).lexically_normal().string());
    write_json(dir / kConfigFile, {{"command", "report"}, {"runs", runs_cfg}, {"base", a.base}});
    write_json(dir / "summary.json", summary);
    write_text(dir / "summary.txt", text.str());
    for (std::size_t i = 0; i < variants.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "confusion-%02zu.csv", i);
      write_text(dir / name, "# " + variants[i].first + "\n" + variants[i].second.confusion_csv());
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  std::uint64_t seed = 0;
  std::size_t seeds = 5, depth = 2, coords = 200, batch = 4, length = 16, freeze = 0;
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  if (a.seeds < 1 || a.batch < 1 || a.length < 1) throw ValidationError("--seeds, --batch and --len must be >= 1");
  const auto cfg = nn::reduced_config(a.depth);
  bool all = true;
  for (std::size_t s = 0; s < a.seeds; ++s) {
    const std::uint64_t sd = derive_seed(a.seed, s);
    nn::InceptionTimeModel model(cfg, sd);
    model.set_freeze(a.freeze);
    Rng rng(derive_seed(sd, "batch"));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    nn::BatchTensor x(a.batch, cfg.input_channels, a.length);
    for (auto& v : x.data()) v = u(rng);
    std::vector<std::size_t> y(a.batch);
    for (std::size_t i = 0; i < a.batch; ++i) y[i] = i % cfg.classes;
    nn::GradCheckOptions opt;
    opt.coordinates = a.coords;
    opt.tolerance = a.tolerance;
    opt.seed = sd;
    const auto r = nn::grad_check(model, x, y, opt);
    char line[160];
    std::snprintf(line, sizeof line, "seed %zu  params %zu  coords %zu  loss %.6f  max rel err %.3e  %s\n", s,
                  r.parameters, r.coordinates, r.loss, r.max_rel_error, r.passed ? "PASS" : "FAIL");
    out << line;
    if (!r.passed)
      for (const auto& w : r.worst)
        out << "    " << w.parameter << "[" << w.index << "] analytic " << w.analytic << " numeric " << w.numeric
            << "\n";
    all = all && r.passed;
  }
  return all ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sim2Real facial-expression time-series pipeline", "s2r"};
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Render the synthetic and surrogate-real datasets");
  gen->add_option("--out", ga.out, "Output directory")->required();
  gen->add_option("--seed", ga.seed, "Generation seed");
  gen->add_option("--identities", ga.identities, "Number of virtual identities (1-24)");
  gen->add_option("--config", ga.config, "JSON config (seed, identities, synthetic_noise, real_noise)");
  gen->add_flag("--force", ga.force, "Overwrite a non-empty output directory");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Cross-validate a training strategy");
  train->add_option("--data", ta.data, "Directory written by generate")->required();
  train->add_option("--out", ta.out, "Run directory")->required();
  train->add_option("--config", ta.config, "JSON config ({seed, label, test_folds, strategy})");
  train->add_option("--seed", ta.seed, "Run seed");
  train->add_option("--label", ta.label, "Variant label used by report");
  train->add_option("--strategy", ta.strategy, "real-only | pretrain-finetune | mixed");
  train->add_option("--model", ta.model, "inception | knn");
  train->add_option("--ratio", ta.ratio, "Synthetic identity ratio for mixed");
  train->add_option("--len", ta.length, "Input length L");
  train->add_option("--freeze", ta.freeze, "Number of leading inception blocks to freeze");
  train->add_option("--knn-k", ta.knn_k, "Neighbours for knn");
  train->add_option("--dtw-band", ta.dtw_band, "Sakoe-Chiba band width for knn");
  train->add_option("--pretrain-epochs", ta.pretrain_epochs, "Synthetic pretraining epochs");
  train->add_option("--finetune-epochs", ta.finetune_epochs, "Real (or mixed) training epochs");
  train->add_option("--batch-size", ta.batch_size, "Mini-batch size");
  train->add_option("--lr", ta.lr, "Adam learning rate");
  train->add_option("--folds", ta.folds, "Test folds to run (default: all)")->delimiter(',');
  train->add_option("--jobs", ta.jobs, "Folds trained concurrently");
  train->add_flag("--force", ta.force, "Overwrite a non-empty run directory");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Re-evaluate a run's checkpoints on their test folds");
  eval->add_option("--run", ea.run, "Run directory written by train")->required();
  eval->add_option("--data", ea.data, "Dataset directory (default: the one recorded in the run)");
  eval->add_option("--out", ea.out, "Write the evaluation to this directory");
  eval->add_flag("--force", ea.force, "Overwrite a non-empty output directory");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Compare runs: per-seed rows, fairness deltas, pooled confusion");
  report->add_option("runs", ra.runs, "Run directories")->required();
  report->add_option("--out", ra.out, "Write tables to this directory");
  report->add_option("--base", ra.base, "Label of the base variant for deltas");
  report->add_flag("--force", ra.force, "Overwrite a non-empty output directory");

  GradcheckArgs ca;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the network gradients");
  gc->add_option("--seed", ca.seed, "Base seed");
  gc->add_option("--seeds", ca.seeds, "Number of model seeds");
  gc->add_option("--depth", ca.depth, "Inception blocks in the reduced model");
  gc->add_option("--coords", ca.coords, "Coordinates sampled per seed");
  gc->add_option("--batch", ca.batch, "Batch size");
  gc->add_option("--len", ca.length, "Sequence length");
  gc->add_option("--freeze", ca.freeze, "Frozen leading blocks");
  gc->add_option("--tolerance", ca.tolerance, "Maximum relative error");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen) return cmd_generate(ga, *gen, out);
    if (*train) return cmd_train(ta, *train, out);
    if (*eval) return cmd_eval(ea, out);
    if (*report) return cmd_report(ra, out);
    if (*gc) return cmd_gradcheck(ca, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace s2r::cli
