#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "biokey/pipeline.hpp"
#include "testing.hpp"

using namespace biokey;
using namespace biokey::pipeline;
using testing::error_of;

namespace {

const Dataset& small_dataset() {
  static const Dataset d = [] {
    DatasetManifest m;
    m.subjects = 4;
    m.sessions = 2;
    m.trials_per_session = 5;
    m.seed = 7;
    return synth_dataset(m);
  }();
  return d;
}

learn::ModelSpec few_trees() {
  learn::ModelSpec s;
  s.n_trees = 15;
  s.seed = 3;
  return s;
}

}  // namespace

TEST_CASE("dataset rows are aligned across modalities") {
  const auto& d = small_dataset();
  CHECK(d.size() == 40);
  CHECK(d.key.size() == 40);
  CHECK(d.eeg.labels == d.key.labels);
  CHECK(d.subject_ids() == std::vector<int>{0, 1, 2, 3});
  CHECK(d.eeg.width() == features::eeg_feature_names().size());
  CHECK(modality_matrix(d, Modality::Fused).width() == d.eeg.width() + d.key.width());
}

TEST_CASE("modality names") {
  CHECK(modality_from_string("fused") == Modality::Fused);
  CHECK(to_string(Modality::Key) == "key");
  CHECK(error_of([] { modality_from_string("voice"); }) == ErrorCode::Parameter);
}

TEST_CASE("fitted artifacts ignore the test rows of their fold") {
  const auto& d = small_dataset();
  const auto y = d.subjects();
  learn::CVSpec cv;
  const auto plan = learn::stratified_folds(y, cv);
  SelectionSpec selection;
  selection.top_k = 20;
  for (std::size_t fold : {0u, 3u}) {
    const auto before = fit_modality(d.eeg, y, plan, fold, few_trees(), selection);
    FeatureMatrix poisoned = d.eeg;
    Rng rng(fold);
    for (auto r : plan.test_rows(fold))
      for (std::size_t j = 0; j < poisoned.width(); ++j) poisoned.rows(r, j) = 1e6 * rng.normal();
    const auto after = fit_modality(poisoned, y, plan, fold, few_trees(), selection);
    CHECK(after.norm == before.norm);
    CHECK(after.features == before.features);
    CHECK(after == before);
    CHECK(before.features.size() == 20);
  }
}

TEST_CASE("template thresholds come from the gallery rows only") {
  const auto& d = small_dataset();
  const auto plan = learn::stratified_folds(d.subjects(), learn::CVSpec{});
  const auto train = plan.train_rows(0);
  const auto gallery = matcher::build_gallery(d.key.select_rows(train));
  FeatureMatrix poisoned = d.key;
  for (auto r : plan.test_rows(0))
    for (std::size_t j = 0; j < poisoned.width(); ++j) poisoned.rows(r, j) = -1e9;
  CHECK(matcher::build_gallery(poisoned.select_rows(train)) == gallery);
}

TEST_CASE("identification is deterministic") {
  const auto& d = small_dataset();
  learn::CVSpec cv;
  cv.seed = 5;
  const auto a = run_identification_all(d, {Modality::Eeg, Modality::Key, Modality::Fused}, few_trees(), cv);
  const auto b = run_identification_all(d, {Modality::Eeg, Modality::Key, Modality::Fused}, few_trees(), cv);
  CHECK(identification_to_json(a) == identification_to_json(b));
  REQUIRE(a.eeg);
  REQUIRE(a.key);
  REQUIRE(a.fused);
  CHECK(a.fused->n_samples == 40);
  CHECK(a.key->accuracy > 0.5);
}

TEST_CASE("a single-subject dataset cannot be identified") {
  DatasetManifest m;
  m.subjects = 1;
  m.sessions = 1;
  m.trials_per_session = 5;
  const auto d = synth_dataset(m);
  CHECK(error_of([&] { run_identification(d, Modality::Key, few_trees(), learn::CVSpec{}); }) ==
        ErrorCode::Configuration);
}

TEST_CASE("personalized folds keep the genuine to imposter ratio") {
  const auto& d = small_dataset();
  const auto r = run_personalized(d, 2, Modality::Key, few_trees(), learn::CVSpec{});
  CHECK(r.folds.size() == 5);
  std::size_t gen = 0, imp = 0;
  for (const auto& f : r.folds) {
    gen += f.test_genuine;
    imp += f.test_imposter;
    CHECK(f.train_imposter == 3 * f.train_genuine);
    CHECK(f.synthetic == 0);
  }
  CHECK(gen == 10);
  CHECK(imp == 30);
  CHECK(r.report.positive_class == kGenuine);
  CHECK(error_of([&] { run_personalized(d, 9, Modality::Key, few_trees(), learn::CVSpec{}); }) ==
        ErrorCode::Parameter);
}

TEST_CASE("oversampling balances only the training folds") {
  const auto& d = small_dataset();
  for (auto method : {augment::Method::Smote, augment::Method::Adasyn, augment::Method::Jitter}) {
    AugmentSpec aug;
    aug.method = method;
    aug.k = 3;
    const auto r = run_personalized(d, 1, Modality::Eeg, few_trees(), learn::CVSpec{}, aug);
    for (const auto& f : r.folds) {
      CHECK(f.train_genuine + f.synthetic == f.train_imposter);
      CHECK(f.test_imposter == 3 * f.test_genuine);
    }
    CHECK(r.report.n_samples == 40);
  }
}

TEST_CASE("template evaluation covers every probe once") {
  const auto& d = small_dataset();
  const auto t = run_template(d, Modality::Key, learn::CVSpec{});
  CHECK(t.cmc.ranks.size() == 40);
  CHECK(t.cmc.curve.size() == 4);
  CHECK(t.cmc.curve.back() == 1.0);
  CHECK(t.fold_rank1.size() == 5);
  CHECK(t.per_subject.size() == 4);
  CHECK(t.pooled.n_genuine == 40);
  CHECK(t.pooled.n_imposter == 120);
}
