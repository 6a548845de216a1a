#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "s2r/pipeline.hpp"

namespace s2r::pipeline {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

std::string lpad(std::string s, std::size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
  return s;
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  sd = 0.0;
  if (xs.size() < 2) return;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

Metrics compute_metrics(const Confusion& m) {
  Metrics r;
  std::size_t trace = 0;
  for (std::size_t i = 0; i < kClassCount; ++i)
    for (std::size_t j = 0; j < kClassCount; ++j) {
      r.total += m[i][j];
      if (i == j) trace += m[i][j];
    }
  if (r.total == 0) throw UndefinedMetricsError("metrics are undefined for an empty confusion matrix");
  r.accuracy = 100.0 * static_cast<double>(trace) / static_cast<double>(r.total);

  double sp = 0, sr = 0, sf = 0;
  std::size_t np = 0, nr = 0, nf = 0;
  for (std::size_t c = 0; c < kClassCount; ++c) {
    std::size_t row = 0, col = 0;
    for (std::size_t k = 0; k < kClassCount; ++k) {
      row += m[c][k];
      col += m[k][c];
    }
    const double diag = static_cast<double>(m[c][c]);
    if (col > 0) r.class_precision[c] = 100.0 * diag / static_cast<double>(col);
    if (row > 0) r.class_recall[c] = 100.0 * diag / static_cast<double>(row);
    if (r.class_precision[c] && r.class_recall[c]) {
      const double p = *r.class_precision[c], q = *r.class_recall[c];
      r.class_f1[c] = p + q > 0 ? 2.0 * p * q / (p + q) : 0.0;
    }
    if (row == 0) {
      // no support: excluded from every macro average
      r.recall_undefined = true;
      continue;
    }
    sr += *r.class_recall[c];
    ++nr;
    if (!r.class_precision[c]) {
      r.precision_undefined = true;
      continue;
    }
    sp += *r.class_precision[c];
    ++np;
    sf += *r.class_f1[c];
    ++nf;
  }
  r.precision = np ? sp / static_cast<double>(np) : 0.0;
  r.recall = nr ? sr / static_cast<double>(nr) : 0.0;
  r.f1 = nf ? sf / static_cast<double>(nf) : 0.0;
  return r;
}

nlohmann::json Metrics::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t c = 0; c < kClassCount; ++c)
    per[std::string(s2r::to_string(kAllLabels[c]))] = {{"precision", opt_json(class_precision[c])},
                                                         {"recall", opt_json(class_recall[c])},
                                                         {"f1", opt_json(class_f1[c])}};
  return {{"total", total},
          {"accuracy", accuracy},
          {"precision", precision},
          {"recall", recall},
          {"f1", f1},
          {"per_class", per},
          {"precision_undefined", precision_undefined},
          {"recall_undefined", recall_undefined}};
}

EvalReport make_report(std::vector<Prediction> predictions, const nlohmann::json& config, std::uint64_t seed) {
  EvalReport r;
  r.config = config;
  r.seed = seed;
  std::map<int, Confusion> per_fold;
  for (const auto& p : predictions) {
    const auto t = index_of(p.truth), q = index_of(p.predicted);
    ++r.confusion[t][q];
    ++per_fold[p.fold][t][q];
    const bool ok = p.truth == p.predicted;
    auto& e = r.by_ethnicity[std::string(s2r::to_string(p.ethnicity))];
    auto& g = r.by_gender[std::string(s2r::to_string(p.gender))];
    e.total++, g.total++;
    e.correct += ok, g.correct += ok;
  }
  r.metrics = compute_metrics(r.confusion);
  for (const auto& [fold, cm] : per_fold) r.folds.push_back({fold, cm, compute_metrics(cm)});
  if (r.folds.size() >= 2) {
    std::vector<double> a, p, q, f;
    for (const auto& fs : r.folds) {
      a.push_back(fs.metrics.accuracy);
      p.push_back(fs.metrics.precision);
      q.push_back(fs.metrics.recall);
      f.push_back(fs.metrics.f1);
    }
    FoldAverage avg;
    mean_std(a, avg.accuracy, avg.accuracy_std);
    mean_std(p, avg.precision, avg.precision_std);
    mean_std(q, avg.recall, avg.recall_std);
    mean_std(f, avg.f1, avg.f1_std);
    r.fold_average = avg;
  }
  r.predictions = std::move(predictions);
  return r;
}

EvalReport combine_reports(const std::vector<EvalReport>& folds) {
  if (folds.empty()) throw ValidationError("no fold reports to combine");
  std::vector<Prediction> all;
  for (const auto& f : folds) all.insert(all.end(), f.predictions.begin(), f.predictions.end());
  return make_report(std::move(all), folds.front().config, folds.front().seed);
}

std::vector<int> EvalReport::test_folds() const {
  std::vector<int> out;
  for (const auto& f : folds) out.push_back(f.fold);
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["config"] = config;
  j["seed"] = seed;
  j["test_folds"] = test_folds();
  j["confusion"] = confusion;
  j["pooled"] = metrics.to_json();
  if (fold_average) {
    const auto& a = *fold_average;
    j["fold_average"] = {{"accuracy", a.accuracy},       {"precision", a.precision},
                         {"recall", a.recall},           {"f1", a.f1},
                         {"accuracy_std", a.accuracy_std}, {"precision_std", a.precision_std},
                         {"recall_std", a.recall_std},   {"f1_std", a.f1_std}};
  }
  nlohmann::json fj = nlohmann::json::array();
  for (const auto& f : folds) fj.push_back({{"fold", f.fold}, {"confusion", f.confusion}, {"metrics", f.metrics.to_json()}});
  j["folds"] = fj;
  auto groups = [](const std::map<std::string, GroupAccuracy>& m) {
    nlohmann::json g = nlohmann::json::object();
    for (const auto& [k, v] : m) g[k] = {{"correct", v.correct}, {"total", v.total}, {"accuracy", v.percent()}};
    return g;
  };
  j["by_ethnicity"] = groups(by_ethnicity);
  j["by_gender"] = groups(by_gender);
  nlohmann::json pj = nlohmann::json::array();
  for (const auto& p : predictions)
    pj.push_back({{"id", p.id},
                  {"truth", s2r::to_string(p.truth)},
                  {"predicted", s2r::to_string(p.predicted)},
                  {"ethnicity", s2r::to_string(p.ethnicity)},
                  {"gender", s2r::to_string(p.gender)},
                  {"fold", p.fold}});
  j["predictions"] = pj;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  std::vector<Prediction> preds;
  try {
    for (const auto& p : j.at("predictions"))
      preds.push_back({p.at("id").get<std::string>(), parse_label(p.at("truth").get<std::string>()),
                       parse_label(p.at("predicted").get<std::string>()),
                       parse_ethnicity(p.at("ethnicity").get<std::string>()),
                       parse_gender(p.at("gender").get<std::string>()), p.at("fold").get<int>()});
    return make_report(std::move(preds), j.at("config"), j.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
}

std::string EvalReport::confusion_csv() const {
  std::ostringstream o;
  o << "true\\predicted";
  for (auto l : kAllLabels) o << ',' << s2r::to_string(l);
  o << '\n';
  for (std::size_t i = 0; i < kClassCount; ++i) {
    o << s2r::to_string(kAllLabels[i]);
    for (std::size_t j = 0; j < kClassCount; ++j) o << ',' << confusion[i][j];
    o << '\n';
  }
  return o.str();
}

std::string EvalReport::to_text() const {
  std::ostringstream o;
  o << "seed " << seed << ", " << metrics.total << " test sequences, folds";
  for (int f : test_folds()) o << ' ' << f;
  o << "\n\nconfusion (rows = true, columns = predicted)\n";
  o << pad("", 11);
  for (auto l : kAllLabels) o << lpad(std::string(s2r::to_string(l)), 11);
  o << '\n';
  for (std::size_t i = 0; i < kClassCount; ++i) {
    o << pad(std::string(s2r::to_string(kAllLabels[i])), 11);
    for (std::size_t j = 0; j < kClassCount; ++j) o << lpad(std::to_string(confusion[i][j]), 11);
    o << '\n';
  }
  o << "\n" << pad("", 14) << lpad("%Prc", 8) << lpad("%Rec", 8) << lpad("%Fs", 8) << lpad("%Acc", 8) << '\n';
  o << pad("pooled", 14) << lpad(fmt("%.1f", metrics.precision), 8) << lpad(fmt("%.1f", metrics.recall), 8)
    << lpad(fmt("%.1f", metrics.f1), 8) << lpad(fmt("%.1f", metrics.accuracy), 8) << '\n';
  if (fold_average) {
    const auto& a = *fold_average;
    o << pad("fold mean", 14) << lpad(fmt("%.1f", a.precision), 8) << lpad(fmt("%.1f", a.recall), 8)
      << lpad(fmt("%.1f", a.f1), 8) << lpad(fmt("%.1f", a.accuracy), 8) << '\n';
    o << pad("fold std", 14) << lpad(fmt("%.1f", a.precision_std), 8) << lpad(fmt("%.1f", a.recall_std), 8)
      << lpad(fmt("%.1f", a.f1_std), 8) << lpad(fmt("%.1f", a.accuracy_std), 8) << '\n';
    for (const auto& f : folds)
      o << pad("fold " + std::to_string(f.fold), 14) << lpad(fmt("%.1f", f.metrics.precision), 8)
        << lpad(fmt("%.1f", f.metrics.recall), 8) << lpad(fmt("%.1f", f.metrics.f1), 8)
        << lpad(fmt("%.1f", f.metrics.accuracy), 8) << '\n';
  }
  if (metrics.precision_undefined) o << "note: precision undefined for a class with no predictions\n";
  if (metrics.recall_undefined) o << "note: a class has no test support\n";
  o << "\ngroup accuracy\n";
  for (const auto* m : {&by_ethnicity, &by_gender})
    for (const auto& [k, v] : *m)
      o << "  " << pad(k, 12) << lpad(fmt("%.1f", v.percent()), 7) << "  (" << v.correct << '/' << v.total << ")\n";
  return o.str();
}

FairnessTable fairness_report(const std::vector<std::pair<std::string, EvalReport>>& variants,
                              const std::string& base) {
  const auto it = std::find_if(variants.begin(), variants.end(), [&](const auto& v) { return v.first == base; });
  if (it == variants.end()) throw ValidationError("fairness report: base variant '" + base + "' is missing");
  FairnessTable t;
  t.base = base;
  t.test_folds = it->second.test_folds();
  for (const auto& [name, rep] : variants)
    if (rep.test_folds() != t.test_folds)
      throw ValidationError("fairness report: variant '" + name + "' was evaluated on different test folds");
  const double base_acc = it->second.metrics.accuracy;
  for (const auto& [name, rep] : variants) t.rows.push_back({name, rep.metrics.accuracy, rep.metrics.accuracy - base_acc});
  return t;
}

nlohmann::json FairnessTable::to_json() const {
  nlohmann::json rj = nlohmann::json::array();
  for (const auto& r : rows)
    rj.push_back({{"variant", r.variant}, {"accuracy", r.accuracy}, {"delta", r.delta}, {"base", r.variant == base}});
  return {{"test_folds", test_folds}, {"base", base}, {"rows", rj}};
}

std::string FairnessTable::to_text() const {
  std::size_t w = 8;
  for (const auto& r : rows) w = std::max(w, r.variant.size() + 2);
  std::ostringstream o;
  o << "test fold(s):";
  for (int f : test_folds) o << ' ' << f;
  o << '\n' << pad("variant", w) << lpad("%Acc", 8) << lpad("%Acc Increase", 15) << '\n';
  for (const auto& r : rows)
    o << pad(r.variant, w) << lpad(fmt("%.1f", r.accuracy), 8)
      << lpad(r.variant == base ? std::string("Base") : fmt("%+.1f", r.delta), 15) << '\n';
  o << "deltas are directional comparisons between variants; absolute levels are not meant to match any "
       "external benchmark\n";
  return o.str();
}

SeedSummary summarize_seeds(const std::vector<std::pair<std::string, EvalReport>>& runs) {
  SeedSummary s;
  std::vector<double> a, p, q, f;
  for (const auto& [label, rep] : runs) {
    const auto& m = rep.metrics;
    s.rows.push_back({label, rep.seed, m.accuracy, m.precision, m.recall, m.f1});
    a.push_back(m.accuracy);
    p.push_back(m.precision);
    q.push_back(m.recall);
    f.push_back(m.f1);
  }
  if (s.rows.empty()) return s;
  SeedRow mean{"mean", 0, 0, 0, 0, 0}, sd{"std", 0, 0, 0, 0, 0};
  mean_std(a, mean.accuracy, sd.accuracy);
  mean_std(p, mean.precision, sd.precision);
  mean_std(q, mean.recall, sd.recall);
  mean_std(f, mean.f1, sd.f1);
  s.mean = mean;
  s.stddev = sd;
  return s;
}

std::string SeedSummary::to_text() const {
  std::size_t w = 6;
  for (const auto& r : rows) w = std::max(w, r.label.size() + 2);
  std::ostringstream o;
  o << pad("run", w) << lpad("seed", 8) << lpad("%Prc", 8) << lpad("%Rec", 8) << lpad("%Fs", 8) << lpad("%Acc", 8)
    << '\n';
  for (const auto& r : rows)
    o << pad(r.label, w) << lpad(std::to_string(r.seed), 8) << lpad(fmt("%.1f", r.precision), 8)
      << lpad(fmt("%.1f", r.recall), 8) << lpad(fmt("%.1f", r.f1), 8) << lpad(fmt("%.1f", r.accuracy), 8) << '\n';
  if (mean && rows.size() > 1) {
    auto pm = [](double m, double s) { return fmt("%.1f", m) + "+-" + fmt("%.1f", s); };
    o << pad("mean+-std", w) << lpad("", 8) << lpad(pm(mean->precision, stddev->precision), 12)
      << lpad(pm(mean->recall, stddev->recall), 12) << lpad(pm(mean->f1, stddev->f1), 12)
      << lpad(pm(mean->accuracy, stddev->accuracy), 12) << '\n';
  }
  return o.str();
}

nlohmann::json SeedSummary::to_json() const {
  auto row = [](const SeedRow& r) {
    return nlohmann::json{{"label", r.label},         {"seed", r.seed}, {"accuracy", r.accuracy},
                          {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
  };
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) j["rows"].push_back(row(r));
  if (mean) {
    j["mean"] = row(*mean);
    j["std"] = row(*stddev);
  }
  return j;
}

}  // namespace s2r::pipeline
