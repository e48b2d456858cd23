// One PASS/FAIL line per acceptance criterion; exit status 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "biokey/augment.hpp"
#include "biokey/features.hpp"
#include "biokey/matcher.hpp"
#include "biokey/pipeline.hpp"
#include "biokey/random.hpp"
#include "biokey/select.hpp"
#include "biokey/wavelet.hpp"
#include "oracles.hpp"

using namespace biokey;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

DatasetManifest acceptance_manifest() {
  DatasetManifest m;
  m.subjects = 10;
  m.sessions = 4;
  m.trials_per_session = 15;
  m.seed = 42;
  return m;
}

const pipeline::Dataset& dataset() {
  static const pipeline::Dataset d = pipeline::synth_dataset(acceptance_manifest());
  return d;
}

learn::ModelSpec forest_spec() {
  learn::ModelSpec s;
  s.seed = 42;
  return s;
}

learn::CVSpec cv_spec() {
  learn::CVSpec cv;
  cv.seed = 42;
  return cv;
}

std::vector<double> random_signal(std::size_t kind, Rng& rng) {
  std::vector<double> x(1024);
  switch (kind % 4) {
    case 0:
      for (auto& v : x) v = rng.normal(rng.normal(), 1.0 + 10.0 * rng.uniform());
      break;
    case 1: {
      const double f1 = 1.0 + 50.0 * rng.uniform(), f2 = 1.0 + 50.0 * rng.uniform();
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / kSampleRateHz;
        x[i] = std::sin(2 * std::numbers::pi * f1 * t) + 0.5 * std::cos(2 * std::numbers::pi * f2 * t) +
               0.1 * rng.normal();
      }
      break;
    }
    case 2: {
      double walk = 0.0;
      for (auto& v : x) v = walk += rng.normal();
      break;
    }
    default:
      for (auto& v : x) v = std::exp(rng.normal()) - 1.0;
  }
  return x;
}

Outcome feature_oracle() {
  const auto t0 = Clock::now();
  Rng rng(20240101);
  const std::vector<std::string> tight = {"median", "p25", "p75", "iqr", "shannon_entropy"};
  std::size_t compared = 0;
  double worst = 0.0;
  std::string worst_name;
  Outcome out;
  for (std::size_t s = 0; s < 100; ++s) {
    const auto x = random_signal(s, rng);
    std::map<std::string, double> ref = oracle::time_features(x);
    for (const auto& [k, v] : oracle::spectral_features(x, kSampleRateHz)) ref[k] = v;
    FeatureVector got = features::time_features(x);
    got.append(features::spectral_features(x, kSampleRateHz));
    if (got.size() != ref.size()) return {false, "feature count differs from the oracle"};
    for (std::size_t j = 0; j < got.size(); ++j) {
      const auto& name = got.names[j];
      const double tol = std::find(tight.begin(), tight.end(), name) != tight.end() ? 1e-12 : 1e-9;
      const double a = got.values[j], b = ref.at(name);
      const double rel = a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b));
      if (rel > worst) worst = rel, worst_name = name;
      if (!oracle::close_rel(a, b, tol)) {
        if (out.pass) out.detail = fmt("signal %zu %s: %.17g vs %.17g; ", s, name.c_str(), a, b);
        out.pass = false;
      }
      ++compared;
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 10.0) out.pass = false;
  out.detail += fmt("%zu values, worst rel %.3g (%s), %.2f s", compared, worst, worst_name.c_str(), secs);
  return out;
}

Outcome wavelet_parseval() {
  Rng rng(77);
  double worst = 0.0;
  for (std::size_t s = 0; s < 50; ++s) {
    const auto x = random_signal(s, rng);
    const auto w = features::wavelet_features(x, WaveletScheme::Wpt18);
    double bands = 0.0, energy = 0.0;
    for (double v : w.values) bands += v;
    for (double v : x) energy += v * v;
    energy /= static_cast<double>(x.size());
    worst = std::max(worst, std::abs(bands - energy) / energy);
  }
  return {worst <= 1e-6, fmt("50 signals, worst rel %.3g", worst)};
}

Outcome keystroke_identity() {
  const auto m = acceptance_manifest();
  std::size_t checked = 0, broken = 0;
  for (int s = 0; s < m.subjects; ++s)
    for (int k = 0; k < m.sessions; ++k)
      for (int t = 0; t < m.trials_per_session; ++t) {
        const auto trial = dataio::synth_trial(m, {s, k, t});
        const auto f = features::keystroke_features(trial.recording.key_events);
        for (int i = 1; i <= 11; ++i) {
          const auto n = std::to_string(i);
          if (f.at("downdown_" + n) != f.at("updown_" + n) + f.at("hold_" + n)) ++broken;
          ++checked;
        }
      }
  return {broken == 0 && checked > 0, fmt("%zu key intervals, %zu mismatches", checked, broken)};
}

Outcome gini_exact() {
  Rng rng(5);
  std::size_t mismatches = 0, count_errors = 0;
  for (std::size_t f = 0; f < 20; ++f) {
    const std::size_t n = 20 + rng.below(81), d = 2 + rng.below(7), classes = 2 + rng.below(3);
    Matrix x(n, d);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(classes));
      for (std::size_t j = 0; j < d; ++j) x(i, j) = std::round(4.0 * (rng.normal() + (j == 0 ? y[i] : 0))) / 4.0;
    }
    learn::ModelSpec spec;
    spec.n_trees = 1 + rng.below(5);
    spec.bootstrap = f % 2 == 0;
    spec.seed = f;
    const auto model = learn::Model::fit(spec, x, y);
    const auto& forest = *model.forest();
    // Without bootstrap every stored node count can be re-derived by routing all rows.
    if (!spec.bootstrap) {
      std::vector<std::size_t> rows(n);
      for (std::size_t i = 0; i < n; ++i) rows[i] = i;
      for (const auto& t : forest.trees)
        if (oracle::routed_counts(t, x, y, rows) != t.counts) ++count_errors;
    }
    const auto raw = select::impurity_decrease(forest);
    const auto ref = oracle::impurity_decrease(forest);
    if (raw != ref) ++mismatches;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
    const auto ranking = select::gini_importance(forest, names);
    double total = 0.0;
    for (double v : ref) total += v;
    for (const auto& [name, v] : ranking.ranked) {
      const auto j = static_cast<std::size_t>(std::stoi(name.substr(1)));
      if (v != ref[j] / total) ++mismatches;
    }
  }
  return {mismatches == 0 && count_errors == 0,
          fmt("20 forests, %zu value mismatches, %zu routed-count mismatches", mismatches, count_errors)};
}

Outcome augmentation_properties() {
  std::size_t off_segment = 0, unbalanced = 0, nondeterministic = 0, jitter_out = 0;
  double ratio_lo = 1e9, ratio_hi = 0.0;
  Rng rng(9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t minority = 3 + rng.below(8), majority = 30 + rng.below(40), d = 2 + rng.below(6);
    Matrix x;
    std::vector<int> y;
    for (std::size_t i = 0; i < minority + majority; ++i) {
      const bool is_min = i < minority;
      std::vector<double> row(d);
      for (auto& v : row) v = rng.normal(is_min ? 0.0 : 1.0, 1.0);
      x.append_row(row);
      y.push_back(is_min ? 1 : 0);
    }
    for (auto method : {augment::Method::Smote, augment::Method::Adasyn}) {
      auto run = [&] {
        return method == augment::Method::Smote ? augment::smote(x, y, 1, majority, 5, seed)
                                                : augment::adasyn(x, y, 1, majority, 5, seed);
      };
      const auto o = run();
      if (static_cast<std::size_t>(std::count(o.labels.begin(), o.labels.end(), 1)) != majority ||
          static_cast<std::size_t>(std::count(o.labels.begin(), o.labels.end(), 0)) != majority)
        ++unbalanced;
      for (std::size_t s = 0; s < o.origins.size(); ++s) {
        const auto& org = o.origins[s];
        if (!oracle::on_segment(o.x.row(x.rows() + s), x.row(org.base), x.row(org.neighbor), 1e-9)) ++off_segment;
      }
      const auto again = run();
      if (!(again.x == o.x) || again.labels != o.labels) ++nondeterministic;
    }
  }
  // Jitter: sample std of the added noise per channel, sigma 0.05, 1024 samples.
  const auto& data = dataset();
  for (std::size_t t = 0; t < 50; ++t) {
    const auto& trial = data.trials[t * 11 % data.trials.size()].eeg;
    const auto j = augment::jitter(trial, 0.05, t);
    if (!(augment::jitter(trial, 0.05, t) == j)) ++nondeterministic;
    if (!(augment::time_warp(trial, 0.2, t) == augment::time_warp(trial, 0.2, t))) ++nondeterministic;
    for (std::size_t c = 0; c < trial.rows(); ++c) {
      std::vector<double> noise(trial.cols());
      for (std::size_t i = 0; i < trial.cols(); ++i) noise[i] = j(c, i) - trial(c, i);
      const double ratio = std::sqrt(oracle::variance(noise) / oracle::variance(trial.row(c)));
      ratio_lo = std::min(ratio_lo, ratio);
      ratio_hi = std::max(ratio_hi, ratio);
      if (ratio < 0.04 || ratio > 0.06) ++jitter_out;
    }
  }
  const bool pass = off_segment == 0 && unbalanced == 0 && nondeterministic == 0 && jitter_out == 0;
  return {pass, fmt("off-segment %zu, unbalanced %zu, nondeterministic %zu, jitter ratio [%.4f, %.4f] "
                    "outside [0.04, 0.06]: %zu",
                    off_segment, unbalanced, nondeterministic, ratio_lo, ratio_hi, jitter_out)};
}

std::optional<pipeline::IdentificationResult> g_identification;

Outcome fusion_dominance() {
  const auto t0 = Clock::now();
  g_identification = pipeline::run_identification_all(
      dataset(), {pipeline::Modality::Eeg, pipeline::Modality::Key, pipeline::Modality::Fused}, forest_spec(),
      cv_spec());
  const double secs = seconds_since(t0);
  const double eeg = g_identification->eeg->accuracy;
  const double key = g_identification->key->accuracy;
  const double fused = g_identification->fused->accuracy;
  const bool pass = fused >= std::max(eeg, key) - 0.005 && fused >= eeg + 0.01 && secs < 300.0;
  return {pass, fmt("eeg %.4f, key %.4f, fused %.4f, %.1f s", eeg, key, fused, secs)};
}

Outcome imbalance_rescue() {
  const auto& data = dataset();
  double none = 0.0, smote = 0.0, adasyn = 0.0;
  const auto subjects = data.subject_ids();
  for (int s : subjects) {
    none += pipeline::run_personalized(data, s, pipeline::Modality::Eeg, forest_spec(), cv_spec()).report.recall;
    pipeline::AugmentSpec aug;
    aug.seed = 42;
    aug.method = augment::Method::Smote;
    smote += pipeline::run_personalized(data, s, pipeline::Modality::Eeg, forest_spec(), cv_spec(), aug).report.recall;
    aug.method = augment::Method::Adasyn;
    adasyn += pipeline::run_personalized(data, s, pipeline::Modality::Eeg, forest_spec(), cv_spec(), aug).report.recall;
  }
  const double n = static_cast<double>(subjects.size());
  none /= n, smote /= n, adasyn /= n;
  return {std::max(smote, adasyn) >= none,
          fmt("EEG mean recall over %zu subjects: none %.4f, smote %.4f, adasyn %.4f", subjects.size(), none, smote,
              adasyn)};
}

std::optional<pipeline::TemplateResult> g_template;

Outcome cmc_properties() {
  const auto& data = dataset();
  Outcome out;
  std::string detail;
  for (auto modality : {pipeline::Modality::Eeg, pipeline::Modality::Key, pipeline::Modality::Fused}) {
    const auto r = pipeline::run_template(data, modality, cv_spec());
    const auto& c = r.cmc.curve;
    bool monotone = true;
    for (std::size_t i = 1; i < c.size(); ++i) monotone = monotone && c[i] >= c[i - 1];
    const bool full = c.size() == 10 && c[9] == 1.0;
    // Probes identical to gallery rows.
    const auto m = pipeline::modality_matrix(data, modality);
    const auto gallery = matcher::build_gallery(m);
    const auto self = matcher::cmc(matcher::match_matrix(m, gallery), data.subjects());
    const auto not_first = std::count_if(self.ranks.begin(), self.ranks.end(), [](auto r) { return r != 1; });
    out.pass = out.pass && monotone && full && not_first == 0;
    detail += fmt("%s rank1 %.4f CMC(10) %.4f monotone %d self-rank>1 %zu; ", pipeline::to_string(modality).c_str(),
                  c[0], c.back(), monotone, static_cast<std::size_t>(not_first));
    if (modality == pipeline::Modality::Eeg) g_template = r;
  }
  detail.resize(detail.size() - 2);
  out.detail = detail;
  return out;
}

Outcome eer_consistency() {
  const auto& r = *g_template;
  std::size_t violations = 0, curves = 0;
  double worst = 0.0;
  auto check = [&](const matcher::ErrorCurve& c) {
    const auto [far, frr] = c.at(c.eer_threshold);
    const double bound = 1.0 / static_cast<double>(std::max(c.n_genuine, c.n_imposter));
    worst = std::max(worst, std::abs(far - frr) / bound);
    if (std::abs(far - frr) > bound) ++violations;
    ++curves;
  };
  check(r.pooled);
  for (const auto& [s, c] : r.per_subject) check(c);
  const auto toy = matcher::far_frr_eer(std::vector<double>{0.05, 0.1, 0.2}, std::vector<double>{0.4, 0.7, 0.9});
  const bool pass = violations == 0 && toy.eer == 0.0;
  return {pass, fmt("%zu curves, worst |FAR-FRR| / bound %.3f, pooled EER %.4f, separated toy EER %.3f", curves, worst,
                    r.pooled.eer, toy.eer)};
}

Outcome template_speedup() {
  const auto r = pipeline::bench_latency(dataset(), pipeline::Modality::Eeg, forest_spec(), cv_spec(), 1000);
  return {r.queries >= 1000 && r.ratio() <= 1.0 / 3.0,
          fmt("%zu queries, template %.0f ns, forest %.0f ns, ratio %.4f", r.queries, r.template_ns, r.forest_ns,
              r.ratio())};
}

Outcome leakage() {
  const auto& data = dataset();
  const auto y = data.subjects();
  const auto plan = learn::stratified_folds(y, cv_spec());
  learn::ModelSpec model = forest_spec();
  model.n_trees = 100;
  pipeline::SelectionSpec selection;
  selection.top_k = 40;
  std::size_t changed = 0, checks = 0;
  Rng rng(13);
  for (std::size_t f = 0; f < plan.n_folds; ++f) {
    const auto test = plan.test_rows(f);
    const auto train = plan.train_rows(f);
    for (const auto* m : {&data.eeg, &data.key}) {
      const auto before = pipeline::fit_modality(*m, y, plan, f, model, selection);
      const auto gallery = matcher::build_gallery(m->select_rows(train));
      // One mutated row, then every test row mutated.
      for (int variant = 0; variant < 2; ++variant) {
        FeatureMatrix poisoned = *m;
        const auto single = test[rng.below(test.size())];
        for (auto r : test) {
          if (variant == 0 && r != single) continue;
          for (std::size_t j = 0; j < poisoned.width(); ++j) poisoned.rows(r, j) = 1e3 * rng.normal();
        }
        const auto after = pipeline::fit_modality(poisoned, y, plan, f, model, selection);
        if (!(after == before)) ++changed;
        if (!(matcher::build_gallery(poisoned.select_rows(train)) == gallery)) ++changed;
        checks += 2;
      }
    }
  }
  return {changed == 0, fmt("%zu fold artifacts compared (model, norm stats, ranking, thresholds), %zu changed",
                            checks, changed)};
}

Outcome determinism() {
  // Second run goes through the on-disk dataset layout.
  const auto dir = std::filesystem::temp_directory_path() / "biokey_acceptance_dataset";
  std::filesystem::remove_all(dir);
  dataio::synth_dataset(acceptance_manifest(), dir);
  const auto loaded = pipeline::load_dataset(dir);
  const auto second = pipeline::run_identification_all(
      loaded, {pipeline::Modality::Eeg, pipeline::Modality::Key, pipeline::Modality::Fused}, forest_spec(), cv_spec());
  const auto a = pipeline::identification_to_json(*g_identification);
  const auto b = pipeline::identification_to_json(second);
  const auto ta = pipeline::template_to_json(*g_template);
  const auto tb = pipeline::template_to_json(pipeline::run_template(loaded, pipeline::Modality::Eeg, cv_spec()));
  std::filesystem::remove_all(dir);
  return {a == b && ta == tb, fmt("identification report %zu bytes %s, template report %zu bytes %s", a.size(),
                                  a == b ? "identical" : "differs", ta.size(), ta == tb ? "identical" : "differs")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"feature-oracle", feature_oracle},
      {"wavelet-parseval", wavelet_parseval},
      {"keystroke-identity", keystroke_identity},
      {"gini-importance", gini_exact},
      {"augmentation-properties", augmentation_properties},
      {"fusion-dominance", fusion_dominance},
      {"imbalance-rescue", imbalance_rescue},
      {"cmc-properties", cmc_properties},
      {"eer-consistency", eer_consistency},
      {"template-speedup", template_speedup},
      {"leakage", leakage},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
