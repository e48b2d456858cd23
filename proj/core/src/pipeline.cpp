#include "biokey/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include <json.hpp>

#include "biokey/error.hpp"
#include "biokey/random.hpp"

namespace biokey::pipeline {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string to_string(Modality m) {
  switch (m) {
    case Modality::Eeg: return "eeg";
    case Modality::Key: return "key";
    case Modality::Fused: return "fused";
  }
  return "fused";
}

Modality modality_from_string(const std::string& name) {
  if (name == "eeg") return Modality::Eeg;
  if (name == "key") return Modality::Key;
  if (name == "fused") return Modality::Fused;
  fail(ErrorCode::Parameter, "unknown modality: " + name);
}

std::vector<int> Dataset::subjects() const {
  std::vector<int> out;
  out.reserve(eeg.labels.size());
  for (const auto& l : eeg.labels) out.push_back(l.subject);
  return out;
}

std::vector<int> Dataset::subject_ids() const {
  auto s = subjects();
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

Dataset build_dataset(std::vector<TrialSample> trials, const DatasetOptions& options) {
  Dataset d;
  d.scheme = options.scheme;
  d.eeg.feature_names = features::eeg_feature_names(options.scheme);
  d.key.feature_names = features::keystroke_feature_names();
  for (const auto& t : trials) {
    const auto e = features::eeg_feature_vector(t, options.scheme);
    const auto k = features::keystroke_features(t.key_events);
    d.eeg.rows.append_row(e.values);
    d.key.rows.append_row(k.values);
    d.eeg.labels.push_back(t.label);
    d.key.labels.push_back(t.label);
  }
  if (options.keep_trials) d.trials = std::move(trials);
  return d;
}

Dataset synth_dataset(const DatasetManifest& manifest, const DatasetOptions& options) {
  std::vector<TrialSample> trials;
  trials.reserve(manifest.total_trials());
  for (int s = 0; s < manifest.subjects; ++s) {
    for (int k = 0; k < manifest.sessions; ++k) {
      for (int t = 0; t < manifest.trials_per_session; ++t) {
        const auto synth = dataio::synth_trial(manifest, {s, k, t});
        auto pre = dsp::preprocess(synth.recording, synth.label, options.preprocess);
        for (auto& trial : pre.trials) trials.push_back(std::move(trial));
      }
    }
  }
  return build_dataset(std::move(trials), options);
}

Dataset load_dataset(const std::filesystem::path& dir, const DatasetOptions& options) {
  const auto manifest = dataio::load_manifest(dir);
  std::vector<TrialSample> trials;
  for (int s = 0; s < manifest.subjects; ++s) {
    for (int k = 0; k < manifest.sessions; ++k) {
      for (int t = 0; t < manifest.trials_per_session; ++t) {
        const TrialLabel label{s, k, t};
        const auto stem = dataio::trial_stem(dir, label);
        auto rec = dataio::load_recording(stem.string() + ".csv");
        const auto keys = stem.string() + ".jsonl";
        if (std::filesystem::exists(keys)) rec.key_events = dataio::load_keystrokes(keys);
        auto pre = dsp::preprocess(rec, label, options.preprocess);
        for (auto& trial : pre.trials) trials.push_back(std::move(trial));
      }
    }
  }
  return build_dataset(std::move(trials), options);
}

Dataset from_feature_matrices(FeatureMatrix eeg, FeatureMatrix key) {
  if (eeg.labels != key.labels) fail(ErrorCode::Integrity, "EEG and keystroke rows are not aligned");
  Dataset d;
  d.eeg = std::move(eeg);
  d.key = std::move(key);
  d.scheme = d.eeg.width() == features::eeg_feature_names(WaveletScheme::Dwt7).size() ? WaveletScheme::Dwt7
                                                                                     : WaveletScheme::Wpt18;
  return d;
}

bool operator==(const ModalityArtifacts& a, const ModalityArtifacts& b) {
  auto same_ranking = [](const select::FeatureRanking& x, const select::FeatureRanking& y) {
    if (x.ranked != y.ranked || x.degenerate != y.degenerate || x.pruned.size() != y.pruned.size()) return false;
    for (std::size_t i = 0; i < x.pruned.size(); ++i) {
      if (x.pruned[i].name != y.pruned[i].name || x.pruned[i].partner != y.pruned[i].partner ||
          x.pruned[i].abs_r != y.pruned[i].abs_r)
        return false;
    }
    return true;
  };
  auto same_sweep = [](const select::SweepResult& x, const select::SweepResult& y) {
    return x.k == y.k && x.accuracy == y.accuracy && x.best_k == y.best_k && x.clipped == y.clipped;
  };
  if (a.ranking.has_value() != b.ranking.has_value() || a.sweep.has_value() != b.sweep.has_value()) return false;
  if (a.ranking && !same_ranking(*a.ranking, *b.ranking)) return false;
  if (a.sweep && !same_sweep(*a.sweep, *b.sweep)) return false;
  return a.norm == b.norm && a.features == b.features && a.model == b.model;
}

ModalityArtifacts fit_modality(const FeatureMatrix& m, std::span<const int> y, const learn::FoldPlan& plan,
                               std::size_t fold, const learn::ModelSpec& model, const SelectionSpec& selection) {
  const auto train_rows = plan.train_rows(fold);
  auto [train, stats] = features::minmax_normalize(m.select_rows(train_rows));
  std::vector<int> y_train;
  for (auto r : train_rows) y_train.push_back(y[r]);

  ModalityArtifacts a;
  a.norm = std::move(stats);
  a.features = train.feature_names;

  if (selection.enabled()) {
    auto [pruned, dropped] = select::prune_correlated(train, selection.prune_threshold);
    learn::ModelSpec ranking_spec = model;
    ranking_spec.kind = learn::ModelKind::Forest;
    ranking_spec.seed = derive_seed(model.seed, {0x52414e4bULL});
    const auto ranker = learn::Model::fit(ranking_spec, pruned.rows, y_train);
    select::FeatureRanking ranking;
    if (ranker.forest()) {
      ranking = select::gini_importance(*ranker.forest(), pruned.feature_names);
    } else {
      ranking.degenerate = true;
      for (const auto& n : pruned.feature_names) ranking.ranked.emplace_back(n, 0.0);
    }
    ranking.pruned = std::move(dropped);

    std::size_t k = pruned.width();
    if (selection.top_k) {
      k = std::min(*selection.top_k, pruned.width());
    } else {
      // Validation rows are the designated part of this fold's training split.
      std::vector<std::size_t> fit_local, val_local;
      for (std::size_t i = 0; i < train_rows.size(); ++i)
        (plan.validation[fold][train_rows[i]] ? val_local : fit_local).push_back(i);
      std::vector<int> y_fit, y_val;
      for (auto i : fit_local) y_fit.push_back(y_train[i]);
      for (auto i : val_local) y_val.push_back(y_train[i]);
      if (!fit_local.empty() && !val_local.empty()) {
        auto sweep = select::sweep_top_k_holdout(pruned.select_rows(fit_local), y_fit, pruned.select_rows(val_local),
                                                 y_val, ranking, selection.sweep_grid, model);
        k = sweep.best_k;
        a.sweep = std::move(sweep);
      }
    }
    a.features = ranking.top(k);
    a.ranking = std::move(ranking);
  }

  const auto cols = select::column_indices(train.feature_names, a.features);
  a.model = learn::Model::fit(model, train.rows.select_cols(cols), y_train);
  return a;
}

Matrix predict_modality(const ModalityArtifacts& a, const FeatureMatrix& m, std::span<const std::size_t> rows,
                        std::span<const int> classes) {
  Matrix x = m.rows.select_rows(rows);
  features::apply_norm_stats(x, a.norm);
  const auto cols = select::column_indices(m.feature_names, a.features);
  const auto proba = a.model.predict_proba(x.select_cols(cols));
  // Map model class columns onto the requested class order.
  Matrix out(rows.size(), classes.size(), 0.0);
  const auto& mc = a.model.classes();
  for (std::size_t j = 0; j < mc.size(); ++j) {
    auto it = std::find(classes.begin(), classes.end(), mc[j]);
    if (it == classes.end()) fail(ErrorCode::Parameter, "model class missing from the class set");
    const auto c = static_cast<std::size_t>(it - classes.begin());
    for (std::size_t i = 0; i < rows.size(); ++i) out(i, c) = proba(i, j);
  }
  if (a.model.degenerate()) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto r = out.row(i);
      const double s = std::accumulate(r.begin(), r.end(), 0.0);
      for (auto& v : r) v /= s;
    }
  }
  return out;
}

namespace {

std::vector<int> argmax_labels(const Matrix& p, std::span<const int> classes) {
  std::vector<int> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto r = p.row(i);
    out[i] = classes[static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin())];
  }
  return out;
}

struct Collector {
  std::vector<int> classes;
  std::vector<int> truth;
  std::vector<int> pred;
  Matrix proba;
  std::vector<std::size_t> order;  // dataset row per collected entry
  learn::EvalReport folds;         // only fold_* vectors used
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;

  explicit Collector(std::vector<int> c) : classes(std::move(c)) {}

  void add_fold(std::span<const std::size_t> rows, std::span<const int> y, const Matrix& p, std::vector<int> predicted,
                std::optional<int> positive = std::nullopt) {
    std::vector<int> t;
    for (auto r : rows) t.push_back(y[r]);
    const auto fold = learn::evaluate(predicted, p, t, classes, positive);
    folds.fold_accuracy.push_back(fold.accuracy);
    folds.fold_precision.push_back(fold.precision);
    folds.fold_recall.push_back(fold.recall);
    folds.fold_f1.push_back(fold.f1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      order.push_back(rows[i]);
      truth.push_back(t[i]);
      pred.push_back(predicted[i]);
      proba.append_row(p.row(i));
    }
  }

  learn::EvalReport finish(std::optional<int> positive = std::nullopt) {
    // Pool in dataset row order so the report is independent of fold order.
    std::vector<std::size_t> idx(order.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return order[a] < order[b]; });
    std::vector<int> t, p;
    Matrix pr;
    for (auto i : idx) {
      t.push_back(truth[i]);
      p.push_back(pred[i]);
      pr.append_row(proba.row(i));
    }
    auto r = learn::evaluate(p, pr, t, classes, positive);
    r.fold_accuracy = folds.fold_accuracy;
    r.fold_precision = folds.fold_precision;
    r.fold_recall = folds.fold_recall;
    r.fold_f1 = folds.fold_f1;
    r.fit_seconds = fit_seconds;
    r.predict_seconds = predict_seconds;
    r.predict_queries = order.size();
    return r;
  }
};

learn::ModelSpec seeded(const learn::ModelSpec& model, std::size_t fold, std::uint64_t which) {
  auto s = model;
  s.seed = derive_seed(model.seed, {fold, which});
  return s;
}

}  // namespace

IdentificationResult run_identification_all(const Dataset& data, const std::vector<Modality>& modalities,
                                            const learn::ModelSpec& model, const learn::CVSpec& cv,
                                            const SelectionSpec& selection) {
  const auto classes = data.subject_ids();
  if (classes.size() < 2) fail(ErrorCode::Configuration, "identification needs at least 2 subjects");
  auto wants = [&](Modality m) { return std::find(modalities.begin(), modalities.end(), m) != modalities.end(); };
  const bool fused = wants(Modality::Fused);
  const bool need_eeg = fused || wants(Modality::Eeg);
  const bool need_key = fused || wants(Modality::Key);

  const auto y = data.subjects();
  IdentificationResult out;
  out.plan = learn::stratified_folds(y, cv);
  Collector c_eeg(classes), c_key(classes), c_fused(classes);

  for (std::size_t f = 0; f < out.plan.n_folds; ++f) {
    const auto test = out.plan.test_rows(f);
    FoldArtifacts fa;
    Matrix p_eeg, p_key;
    if (need_eeg) {
      auto t0 = Clock::now();
      fa.eeg = fit_modality(data.eeg, y, out.plan, f, seeded(model, f, 1), selection);
      c_eeg.fit_seconds += seconds_since(t0);
      t0 = Clock::now();
      p_eeg = predict_modality(*fa.eeg, data.eeg, test, classes);
      c_eeg.predict_seconds += seconds_since(t0);
      c_eeg.add_fold(test, y, p_eeg, argmax_labels(p_eeg, classes));
    }
    if (need_key) {
      auto t0 = Clock::now();
      fa.key = fit_modality(data.key, y, out.plan, f, seeded(model, f, 2), selection);
      c_key.fit_seconds += seconds_since(t0);
      t0 = Clock::now();
      p_key = predict_modality(*fa.key, data.key, test, classes);
      c_key.predict_seconds += seconds_since(t0);
      c_key.add_fold(test, y, p_key, argmax_labels(p_key, classes));
    }
    if (fused) {
      Matrix s = learn::fuse(p_eeg, p_key);
      for (auto& v : s.data()) v *= 0.5;
      c_fused.fit_seconds = c_eeg.fit_seconds + c_key.fit_seconds;
      c_fused.predict_seconds = c_eeg.predict_seconds + c_key.predict_seconds;
      c_fused.add_fold(test, y, s, argmax_labels(s, classes));
    }
    out.folds.push_back(std::move(fa));
  }
  if (wants(Modality::Eeg)) out.eeg = c_eeg.finish();
  if (wants(Modality::Key)) out.key = c_key.finish();
  if (fused) out.fused = c_fused.finish();
  return out;
}

learn::EvalReport run_identification(const Dataset& data, Modality modality, const learn::ModelSpec& model,
                                     const learn::CVSpec& cv, const SelectionSpec& selection) {
  auto r = run_identification_all(data, {modality}, model, cv, selection);
  switch (modality) {
    case Modality::Eeg: return *r.eeg;
    case Modality::Key: return *r.key;
    case Modality::Fused: return *r.fused;
  }
  return *r.fused;
}

std::string identification_to_json(const IdentificationResult& r, bool include_timing) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  auto put = [&](const char* name, const std::optional<learn::EvalReport>& rep) {
    if (rep) j[name] = nlohmann::ordered_json::parse(learn::report_to_json(*rep, include_timing));
  };
  put("eeg", r.eeg);
  put("key", r.key);
  put("fused", r.fused);
  auto& folds = j["selected_features"] = nlohmann::ordered_json::array();
  for (const auto& f : r.folds) {
    nlohmann::ordered_json e = nlohmann::ordered_json::object();
    if (f.eeg) e["eeg"] = f.eeg->features.size();
    if (f.key) e["key"] = f.key->features.size();
    folds.push_back(e);
  }
  return j.dump(2) + "\n";
}

PersonalizedResult run_personalized(const Dataset& data, int subject, Modality modality,
                                    const learn::ModelSpec& model, const learn::CVSpec& cv,
                                    const std::optional<AugmentSpec>& aug) {
  const auto subjects = data.subjects();
  if (std::find(subjects.begin(), subjects.end(), subject) == subjects.end())
    fail(ErrorCode::Parameter, "subject " + std::to_string(subject) + " is not in the dataset");
  std::vector<int> y(subjects.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = subjects[i] == subject ? kGenuine : kImposter;

  const auto method = aug ? aug->method : augment::Method::None;
  const bool raw_method = method == augment::Method::Jitter || method == augment::Method::TimeWarp;
  const bool feature_method = method == augment::Method::Smote || method == augment::Method::Adasyn;
  if (raw_method && data.trials.size() != data.size())
    fail(ErrorCode::State, "raw-signal augmentation needs the preprocessed trials");
  if (raw_method && !(aug->sigma > 0.0))
    fail(ErrorCode::Parameter, "sigma must be positive");

  const bool need_eeg = modality != Modality::Key;
  const bool need_key = modality != Modality::Eeg;
  const std::vector<int> classes{kImposter, kGenuine};
  const auto plan = learn::stratified_folds(y, cv);

  PersonalizedResult out;
  out.subject = subject;
  Collector col(classes);

  for (std::size_t f = 0; f < plan.n_folds; ++f) {
    const auto train = plan.train_rows(f);
    const auto test = plan.test_rows(f);
    PersonalizedFold info;
    std::vector<std::size_t> genuine_train;
    for (auto r : train)
      if (y[r] == kGenuine) genuine_train.push_back(r);
    info.train_genuine = genuine_train.size();
    info.train_imposter = train.size() - genuine_train.size();
    for (auto r : test) (y[r] == kGenuine ? info.test_genuine : info.test_imposter)++;
    const std::size_t target = aug && aug->target_count ? *aug->target_count : info.train_imposter;
    if (aug && method != augment::Method::None && target < info.train_genuine)
      fail(ErrorCode::Parameter, "target count is below the current genuine count");

    std::vector<int> y_train;
    for (auto r : train) y_train.push_back(y[r]);

    // Raw-signal synthetics: new EEG trials from training genuine trials.
    FeatureMatrix synth_eeg, synth_key;
    if (raw_method) {
      const std::size_t extra = target - info.train_genuine;
      synth_eeg.feature_names = data.eeg.feature_names;
      synth_key.feature_names = data.key.feature_names;
      for (std::size_t i = 0; i < extra; ++i) {
        const auto base = genuine_train[i % genuine_train.size()];
        const auto seed = derive_seed(aug->seed, {static_cast<std::uint64_t>(subject), f, i});
        TrialSample t = data.trials[base];
        t.eeg = method == augment::Method::Jitter ? augment::jitter(t.eeg, aug->sigma, seed)
                                                  : augment::time_warp(t.eeg, aug->sigma, seed);
        synth_eeg.rows.append_row(features::eeg_feature_vector(t, data.scheme).values);
        synth_key.rows.append_row(data.key.rows.row(base));
        synth_eeg.labels.push_back(t.label);
        synth_key.labels.push_back(t.label);
        y_train.push_back(kGenuine);
      }
      info.synthetic = extra;
    }

    auto fit_one = [&](const FeatureMatrix& m, const FeatureMatrix& extra, std::uint64_t which) {
      FeatureMatrix tr = m.select_rows(train);
      for (std::size_t i = 0; i < extra.size(); ++i) {
        tr.rows.append_row(extra.rows.row(i));
        tr.labels.push_back(extra.labels[i]);
      }
      auto [norm, stats] = features::minmax_normalize(tr);
      std::vector<int> labels = y_train;
      Matrix x = std::move(norm.rows);
      if (feature_method) {
        const auto seed = derive_seed(aug->seed, {static_cast<std::uint64_t>(subject), f, which});
        auto o = method == augment::Method::Smote ? augment::smote(x, labels, kGenuine, target, aug->k, seed)
                                                  : augment::adasyn(x, labels, kGenuine, target, aug->k, seed);
        info.synthetic = o.origins.size();
        info.uniform_fallback = info.uniform_fallback || o.uniform_fallback;
        x = std::move(o.x);
        labels = std::move(o.labels);
      }
      ModalityArtifacts a;
      a.norm = std::move(stats);
      a.features = m.feature_names;
      a.model = learn::Model::fit(seeded(model, f, which), x, labels);
      return a;
    };

    auto t0 = Clock::now();
    std::optional<ModalityArtifacts> a_eeg, a_key;
    if (need_eeg) a_eeg = fit_one(data.eeg, synth_eeg, 1);
    if (need_key) a_key = fit_one(data.key, synth_key, 2);
    col.fit_seconds += seconds_since(t0);

    t0 = Clock::now();
    Matrix p;
    std::vector<int> pred(test.size());
    if (modality == Modality::Fused) {
      const auto pe = predict_modality(*a_eeg, data.eeg, test, classes);
      const auto pk = predict_modality(*a_key, data.key, test, classes);
      p = Matrix(test.size(), 2);
      for (std::size_t i = 0; i < test.size(); ++i) {
        const double score = pe(i, 1) + pk(i, 1);
        pred[i] = score >= kFusedGenuineThreshold ? kGenuine : kImposter;
        p(i, 1) = 0.5 * score;
        p(i, 0) = 1.0 - p(i, 1);
      }
    } else {
      p = modality == Modality::Eeg ? predict_modality(*a_eeg, data.eeg, test, classes)
                                    : predict_modality(*a_key, data.key, test, classes);
      pred = argmax_labels(p, classes);
    }
    col.predict_seconds += seconds_since(t0);
    col.add_fold(test, y, p, pred, kGenuine);
    out.folds.push_back(info);
  }
  out.report = col.finish(kGenuine);
  return out;
}

FeatureMatrix modality_matrix(const Dataset& data, Modality modality) {
  if (modality == Modality::Eeg) return data.eeg;
  if (modality == Modality::Key) return data.key;
  FeatureMatrix m;
  m.feature_names = data.eeg.feature_names;
  m.feature_names.insert(m.feature_names.end(), data.key.feature_names.begin(), data.key.feature_names.end());
  m.labels = data.eeg.labels;
  m.rows = Matrix(data.size(), m.feature_names.size());
  for (std::size_t r = 0; r < data.size(); ++r) {
    auto dst = m.rows.row(r);
    const auto e = data.eeg.rows.row(r);
    const auto k = data.key.rows.row(r);
    std::copy(e.begin(), e.end(), dst.begin());
    std::copy(k.begin(), k.end(), dst.begin() + static_cast<std::ptrdiff_t>(e.size()));
  }
  return m;
}

TemplateResult run_template(const Dataset& data, Modality modality, const learn::CVSpec& cv) {
  const auto m = modality_matrix(data, modality);
  const auto y = data.subjects();
  const auto plan = learn::stratified_folds(y, cv);
  TemplateResult out;
  std::vector<std::size_t> ranks(data.size(), 0);
  matcher::VerificationScores pooled;
  std::map<int, matcher::VerificationScores> per;
  std::size_t n_subjects = 0;
  for (std::size_t f = 0; f < plan.n_folds; ++f) {
    const auto train = plan.train_rows(f);
    const auto test = plan.test_rows(f);
    const auto gallery = matcher::build_gallery(m.select_rows(train));
    n_subjects = gallery.groups.size();
    const auto probes = m.select_rows(test);
    const auto mm = matcher::match_matrix(probes, gallery);
    std::vector<int> truth;
    for (auto r : test) truth.push_back(y[r]);
    const auto c = matcher::cmc(mm, truth);
    out.fold_rank1.push_back(c.curve.empty() ? 0.0 : c.curve[0]);
    for (std::size_t i = 0; i < test.size(); ++i) ranks[test[i]] = c.ranks[i];
    const auto v = matcher::verification_scores(mm, truth);
    pooled.genuine.insert(pooled.genuine.end(), v.genuine.begin(), v.genuine.end());
    pooled.imposter.insert(pooled.imposter.end(), v.imposter.begin(), v.imposter.end());
    for (int s : mm.subjects) {
      const auto vs = matcher::verification_scores(mm, truth, s);
      auto& acc = per[s];
      acc.genuine.insert(acc.genuine.end(), vs.genuine.begin(), vs.genuine.end());
      acc.imposter.insert(acc.imposter.end(), vs.imposter.begin(), vs.imposter.end());
    }
  }
  out.cmc.ranks = ranks;
  out.cmc.curve = matcher::cmc_from_ranks(ranks, n_subjects);
  out.pooled = matcher::far_frr_eer(pooled.genuine, pooled.imposter);
  double sum = 0.0;
  for (const auto& [s, v] : per) {
    out.per_subject[s] = matcher::far_frr_eer(v.genuine, v.imposter);
    sum += out.per_subject[s].eer;
  }
  out.mean_subject_eer = per.empty() ? 0.0 : sum / static_cast<double>(per.size());
  return out;
}

std::string template_to_json(const TemplateResult& r) {
  nlohmann::ordered_json j;
  j["cmc"] = r.cmc.curve;
  j["rank1"] = r.cmc.curve.size() > 0 ? r.cmc.curve[0] : 0.0;
  j["rank2"] = r.cmc.curve.size() > 1 ? r.cmc.curve[1] : j["rank1"].get<double>();
  j["rank3"] = r.cmc.curve.size() > 2 ? r.cmc.curve[2] : j["rank2"].get<double>();
  j["fold_rank1"] = r.fold_rank1;
  j["pooled_eer"] = r.pooled.eer;
  j["pooled_eer_threshold"] = r.pooled.eer_threshold;
  j["pooled_eer_hull"] = r.pooled.eer_hull;
  j["mean_subject_eer"] = r.mean_subject_eer;
  auto& per = j["subject_eer"] = nlohmann::ordered_json::object();
  for (const auto& [s, c] : r.per_subject) per[std::to_string(s)] = c.eer;
  return j.dump(2) + "\n";
}

LatencyResult bench_latency(const Dataset& data, Modality modality, const learn::ModelSpec& model,
                            const learn::CVSpec& cv, std::size_t min_queries) {
  const auto m = modality_matrix(data, modality);
  const auto y = data.subjects();
  const auto plan = learn::stratified_folds(y, cv);
  const auto train = plan.train_rows(0);
  const auto test = plan.test_rows(0);
  if (test.empty()) fail(ErrorCode::InsufficientData, "no test rows to query");

  auto [tr, stats] = features::minmax_normalize(m.select_rows(train));
  std::vector<int> y_train;
  for (auto r : train) y_train.push_back(y[r]);
  const auto fitted = learn::Model::fit(seeded(model, 0, 3), tr.rows, y_train);
  const auto gallery = matcher::build_gallery(tr);
  const auto subjects = gallery.subjects();

  Matrix probes = m.rows.select_rows(test);
  features::apply_norm_stats(probes, stats);

  LatencyResult out;
  const std::size_t rounds = (min_queries + test.size() - 1) / test.size();
  out.queries = rounds * test.size();
  std::size_t template_hits = 0, forest_hits = 0;

  auto t0 = Clock::now();
  for (std::size_t q = 0; q < out.queries; ++q) {
    const auto i = q % test.size();
    const auto bits = gallery.binarize(probes.row(i));
    const auto d = matcher::group_distances(bits, gallery);
    const auto best = static_cast<std::size_t>(std::min_element(d.begin(), d.end()) - d.begin());
    template_hits += subjects[best] == y[test[i]];
  }
  out.template_ns = std::chrono::duration<double, std::nano>(Clock::now() - t0).count() / out.queries;

  t0 = Clock::now();
  for (std::size_t q = 0; q < out.queries; ++q) {
    const auto i = q % test.size();
    const auto p = fitted.predict_proba_row(probes.row(i));
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    forest_hits += fitted.classes()[best] == y[test[i]];
  }
  out.forest_ns = std::chrono::duration<double, std::nano>(Clock::now() - t0).count() / out.queries;
  out.template_rank1 = static_cast<double>(template_hits) / static_cast<double>(out.queries);
  out.forest_accuracy = static_cast<double>(forest_hits) / static_cast<double>(out.queries);
  return out;
}

}  // namespace biokey::pipeline
