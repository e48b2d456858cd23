// Cross-validation folds, score fusion and classification metrics.
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "biokey/error.hpp"
#include "biokey/learn.hpp"
#include "biokey/random.hpp"

namespace biokey::learn {

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_row.size(); ++i)
    if (fold_of_row[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_row.size(); ++i)
    if (fold_of_row[i] != fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::fit_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_row.size(); ++i)
    if (fold_of_row[i] != fold && !validation[fold][i]) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::validation_rows(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_row.size(); ++i)
    if (validation[fold][i]) out.push_back(i);
  return out;
}

FoldPlan stratified_folds(std::span<const int> labels, const CVSpec& spec) {
  if (spec.n_folds < 2) fail(ErrorCode::Configuration, "cross-validation needs at least 2 folds");
  if (spec.validation_fraction < 0.0 || spec.validation_fraction >= 1.0) {
    fail(ErrorCode::Configuration, "validation fraction must be in [0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (!spec.stratified) {
    by_class.clear();
    auto& all = by_class[0];
    all.resize(labels.size());
    std::iota(all.begin(), all.end(), 0);
  }
  for (const auto& [label, rows] : by_class) {
    if (rows.size() < spec.n_folds) {
      fail(ErrorCode::Configuration, "class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                                         " rows, fewer than " + std::to_string(spec.n_folds) + " folds");
    }
  }

  FoldPlan plan;
  plan.n_folds = spec.n_folds;
  plan.fold_of_row.assign(labels.size(), 0);
  plan.validation.assign(spec.n_folds, std::vector<bool>(labels.size(), false));

  // Shuffled class members are dealt round-robin; the starting fold rotates
  // across classes so total fold sizes also stay within one of each other.
  std::size_t offset = 0;
  std::map<int, std::vector<std::size_t>> shuffled;
  for (auto& [label, rows] : by_class) {
    auto order = rows;
    Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(static_cast<std::int64_t>(label)) ^ 0x5bd1e995ULL}));
    rng.shuffle(order.begin(), order.end());
    for (std::size_t i = 0; i < order.size(); ++i) plan.fold_of_row[order[i]] = (offset + i) % spec.n_folds;
    offset = (offset + order.size()) % spec.n_folds;
    shuffled[label] = std::move(order);
  }
  for (std::size_t f = 0; f < spec.n_folds; ++f) {
    for (const auto& [label, order] : shuffled) {
      std::vector<std::size_t> train;
      for (auto r : order)
        if (plan.fold_of_row[r] != f) train.push_back(r);
      const auto n_val = static_cast<std::size_t>(std::lround(spec.validation_fraction * static_cast<double>(train.size())));
      for (std::size_t i = 0; i < n_val && i < train.size(); ++i) plan.validation[f][train[i]] = true;
    }
  }
  return plan;
}

FusionResult fuse(std::span<const double> p_eeg, std::span<const double> p_key) {
  if (p_eeg.size() != p_key.size() || p_eeg.empty()) {
    fail(ErrorCode::Parameter, "fusion needs probability rows over the same class set");
  }
  FusionResult r;
  r.scores.resize(p_eeg.size());
  for (std::size_t c = 0; c < p_eeg.size(); ++c) r.scores[c] = p_eeg[c] + p_key[c];
  r.predicted = static_cast<std::size_t>(std::max_element(r.scores.begin(), r.scores.end()) - r.scores.begin());
  return r;
}

Matrix fuse(const Matrix& p_eeg, const Matrix& p_key) {
  if (p_eeg.rows() != p_key.rows() || p_eeg.cols() != p_key.cols()) {
    fail(ErrorCode::Parameter, "fusion needs probability matrices of equal shape");
  }
  Matrix out(p_eeg.rows(), p_eeg.cols());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = p_eeg.data()[i] + p_key.data()[i];
  return out;
}

namespace {

RocCurve roc_for(int label, std::span<const double> scores, const std::vector<bool>& positive) {
  RocCurve roc;
  roc.label = label;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const auto neg = static_cast<double>(positive.size()) - pos;
  double tp = 0.0;
  double fp = 0.0;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (positive[order[i]]) {
      tp += 1.0;
    } else {
      fp += 1.0;
    }
    // Emit a point only after the last of a run of tied scores.
    if (i + 1 == order.size() || scores[order[i + 1]] != scores[order[i]]) {
      roc.fpr.push_back(fp / neg);
      roc.tpr.push_back(tp / pos);
    }
  }
  for (std::size_t i = 1; i < roc.fpr.size(); ++i) {
    roc.auc += (roc.fpr[i] - roc.fpr[i - 1]) * 0.5 * (roc.tpr[i] + roc.tpr[i - 1]);
  }
  return roc;
}

}  // namespace

EvalReport evaluate(std::span<const int> predictions, const Matrix& probabilities, std::span<const int> truth,
                    std::span<const int> classes, std::optional<int> positive_class) {
  if (truth.empty()) fail(ErrorCode::Parameter, "cannot evaluate an empty prediction set");
  if (predictions.size() != truth.size() || probabilities.rows() != truth.size() ||
      probabilities.cols() != classes.size()) {
    fail(ErrorCode::Parameter, "predictions, probabilities and truth are not aligned");
  }
  EvalReport r;
  r.classes.assign(classes.begin(), classes.end());
  r.n_samples = truth.size();
  const std::size_t k = classes.size();
  auto index_of = [&](int label) {
    const auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) fail(ErrorCode::Parameter, "label " + std::to_string(label) + " not in class set");
    return static_cast<std::size_t>(it - classes.begin());
  };
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) r.confusion[index_of(truth[i])][index_of(predictions[i])]++;

  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) correct += r.confusion[c][c];
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  r.class_precision.assign(k, 0.0);
  r.class_recall.assign(k, 0.0);
  r.class_f1.assign(k, 0.0);
  std::vector<bool> present(k, false);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t actual = 0;
    std::size_t predicted = 0;
    for (std::size_t j = 0; j < k; ++j) {
      actual += r.confusion[c][j];
      predicted += r.confusion[j][c];
    }
    present[c] = actual > 0;
    if (!present[c]) {
      r.classes_absent_from_truth.push_back(classes[c]);
      continue;
    }
    const double tp = static_cast<double>(r.confusion[c][c]);
    const double p = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
    const double rc = tp / static_cast<double>(actual);
    r.class_precision[c] = p;
    r.class_recall[c] = rc;
    r.class_f1[c] = (p + rc) > 0 ? 2.0 * p * rc / (p + rc) : 0.0;
  }

  if (positive_class) {
    const auto c = index_of(*positive_class);
    r.positive_class = positive_class;
    r.precision = r.class_precision[c];
    r.recall = r.class_recall[c];
    r.f1 = r.class_f1[c];
  } else {
    double count = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (!present[c]) continue;
      r.precision += r.class_precision[c];
      r.recall += r.class_recall[c];
      r.f1 += r.class_f1[c];
      count += 1.0;
    }
    r.precision /= count;
    r.recall /= count;
    r.f1 /= count;
  }

  double auc_sum = 0.0;
  std::size_t auc_count = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<bool> positive(truth.size());
    std::vector<double> scores(truth.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      positive[i] = truth[i] == classes[c];
      pos += positive[i];
      scores[i] = probabilities(i, c);
    }
    if (pos == 0 || pos == truth.size()) continue;
    r.roc.push_back(roc_for(classes[c], scores, positive));
    auc_sum += r.roc.back().auc;
    ++auc_count;
  }
  r.macro_auc = auc_count > 0 ? auc_sum / static_cast<double>(auc_count) : 0.0;
  return r;
}

std::string report_to_json(const EvalReport& r, bool include_timing) {
  nlohmann::ordered_json j;
  j["n_samples"] = r.n_samples;
  j["classes"] = r.classes;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["averaging"] = r.positive_class ? "positive_class" : "macro";
  if (r.positive_class) j["positive_class"] = *r.positive_class;
  j["macro_auc"] = r.macro_auc;
  j["class_precision"] = r.class_precision;
  j["class_recall"] = r.class_recall;
  j["class_f1"] = r.class_f1;
  j["classes_absent_from_truth"] = r.classes_absent_from_truth;
  j["confusion"] = r.confusion;
  if (!r.fold_accuracy.empty()) {
    j["folds"] = {{"accuracy", r.fold_accuracy},
                  {"precision", r.fold_precision},
                  {"recall", r.fold_recall},
                  {"f1", r.fold_f1}};
  }
  auto roc = nlohmann::ordered_json::array();
  for (const auto& c : r.roc) roc.push_back({{"class", c.label}, {"auc", c.auc}, {"points", c.fpr.size()}});
  j["roc"] = roc;
  if (include_timing) {
    j["timing"] = {{"fit_seconds", r.fit_seconds},
                   {"predict_seconds", r.predict_seconds},
                   {"predict_queries", r.predict_queries}};
  }
  return j.dump(2);
}

std::string confusion_to_tsv(const EvalReport& r) {
  std::ostringstream out;
  out << "truth\\predicted";
  for (int c : r.classes) out << '\t' << c;
  out << '\n';
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    out << r.classes[i];
    for (auto v : r.confusion[i]) out << '\t' << v;
    out << '\n';
  }
  return out.str();
}

std::string roc_to_tsv(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "class\tfpr\ttpr\n";
  for (const auto& c : r.roc) {
    for (std::size_t i = 0; i < c.fpr.size(); ++i) out << c.label << '\t' << c.fpr[i] << '\t' << c.tpr[i] << '\n';
  }
  return out.str();
}

}  // namespace biokey::learn
