#include <benchmark/benchmark.h>

#include "biokey/features.hpp"
#include "biokey/matcher.hpp"
#include "biokey/pipeline.hpp"
#include "biokey/random.hpp"

using namespace biokey;

namespace {

struct Fixture {
  FeatureMatrix train;
  FeatureMatrix test;
  matcher::TemplateGallery gallery;
  learn::Model model;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    DatasetManifest m;
    m.subjects = 10;
    m.sessions = 2;
    m.trials_per_session = 10;
    m.seed = 42;
    const auto data = pipeline::synth_dataset(m);
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < data.size(); ++i) (data.eeg.labels[i].session == 0 ? train : test).push_back(i);
    Fixture out;
    auto [norm, stats] = features::minmax_normalize(data.eeg.select_rows(train));
    out.train = std::move(norm);
    out.test = features::minmax_normalize(data.eeg.select_rows(test), stats).first;
    out.gallery = matcher::build_gallery(out.train);
    std::vector<int> y;
    for (const auto& l : out.train.labels) y.push_back(l.subject);
    learn::ModelSpec spec;
    spec.seed = 42;
    out.model = learn::Model::fit(spec, out.train.rows, y);
    return out;
  }();
  return f;
}

void BM_TemplateIdentify(benchmark::State& state) {
  const auto& f = fixture();
  std::size_t i = 0;
  for (auto _ : state) {
    const auto probe = f.gallery.binarize(f.test.rows.row(i++ % f.test.size()));
    benchmark::DoNotOptimize(matcher::group_distances(probe, f.gallery));
  }
}
BENCHMARK(BM_TemplateIdentify);

void BM_ForestPredict(benchmark::State& state) {
  const auto& f = fixture();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(f.model.predict_proba_row(f.test.rows.row(i++ % f.test.size())));
}
BENCHMARK(BM_ForestPredict);

void BM_Hamming(benchmark::State& state) {
  Rng rng(1);
  matcher::BitTemplate a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) a.set(k, rng.below(2) == 1), b.set(k, rng.below(2) == 1);
  for (auto _ : state) benchmark::DoNotOptimize(matcher::hamming(a, b));
}
BENCHMARK(BM_Hamming)->Arg(45)->Arg(206)->Arg(251);

}  // namespace

BENCHMARK_MAIN();
