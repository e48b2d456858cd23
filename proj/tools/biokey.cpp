// Command-line front end: dataset generation, feature extraction, ranking,
// training, evaluation, template matching, latency bench, HTTP service.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "biokey/error.hpp"
#include "biokey/pipeline.hpp"
#include "biokey/service.hpp"

namespace fs = std::filesystem;
using namespace biokey;

namespace {

struct DataArgs {
  std::string dir;
  int subjects = 10;
  int sessions = 4;
  int trials = 15;
  std::uint64_t seed = 42;
  std::string scheme = "wpt18";

  void add(CLI::App* app) {
    app->add_option("--data", dir, "Dataset directory (generated in memory when omitted)");
    app->add_option("--subjects", subjects, "Subjects for in-memory generation");
    app->add_option("--sessions", sessions, "Sessions per subject for in-memory generation");
    app->add_option("--trials", trials, "Trials per session for in-memory generation");
    app->add_option("--seed", seed, "Seed for generation and training");
    app->add_option("--scheme", scheme, "Wavelet scheme")->check(CLI::IsMember({"wpt18", "dwt7"}));
  }

  DatasetManifest manifest() const {
    DatasetManifest m;
    m.subjects = subjects;
    m.sessions = sessions;
    m.trials_per_session = trials;
    m.seed = seed;
    return m;
  }

  pipeline::Dataset load() const {
    pipeline::DatasetOptions opt;
    opt.scheme = scheme == "dwt7" ? WaveletScheme::Dwt7 : WaveletScheme::Wpt18;
    return dir.empty() ? pipeline::synth_dataset(manifest(), opt) : pipeline::load_dataset(dir, opt);
  }
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Configuration, "cannot write " + path);
  out << text;
}

learn::ModelSpec model_spec(const std::string& name, std::size_t trees, std::uint64_t seed) {
  learn::ModelSpec spec;
  spec.kind = learn::model_kind_from_string(name);
  spec.n_trees = trees;
  spec.seed = seed;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biokey: EEG and keystroke biometric engine"};
  app.require_subcommand(1);

  // synth
  DataArgs synth_args;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic dataset");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--subjects", synth_args.subjects);
  synth->add_option("--sessions", synth_args.sessions);
  synth->add_option("--trials", synth_args.trials);
  synth->add_option("--seed", synth_args.seed);

  // extract
  DataArgs extract_args;
  std::string extract_out;
  bool extract_normalize = false;
  auto* extract = app.add_subcommand("extract", "Extract EEG and keystroke feature matrices");
  extract_args.add(extract);
  extract->add_option("--out", extract_out, "Output directory for eeg.csv and key.csv")->required();
  extract->add_flag("--normalize", extract_normalize, "Min-max normalize and store the statistics");

  // rank
  DataArgs rank_args;
  std::string rank_modality = "eeg", rank_out, rank_tsv;
  std::size_t rank_trees = 500;
  auto* rank = app.add_subcommand("rank", "Correlation pruning and Gini importance ranking on all rows");
  rank_args.add(rank);
  rank->add_option("--modality", rank_modality)->check(CLI::IsMember({"eeg", "key"}));
  rank->add_option("--trees", rank_trees);
  rank->add_option("--out", rank_out, "Ranking JSON (stdout when omitted)");
  rank->add_option("--tsv", rank_tsv, "Ranking TSV");

  // train
  DataArgs train_args;
  std::string train_modality = "eeg", train_model = "forest", train_out;
  std::size_t train_trees = 500;
  auto* train = app.add_subcommand("train", "Fit a classifier on all rows and save it");
  train_args.add(train);
  train->add_option("--modality", train_modality)->check(CLI::IsMember({"eeg", "key"}));
  train->add_option("--model", train_model)->check(CLI::IsMember({"cart", "forest", "knn", "lda"}));
  train->add_option("--trees", train_trees);
  train->add_option("--out", train_out, "Model JSON")->required();

  // eval
  DataArgs eval_args;
  std::string eval_modality = "fused", eval_model = "forest", eval_method = "classify", eval_augment = "none";
  std::string eval_out, eval_confusion, eval_roc;
  std::size_t eval_folds = 5, eval_trees = 500;
  std::optional<std::size_t> eval_top_k;
  std::optional<int> eval_subject;
  bool eval_timing = false;
  auto* eval = app.add_subcommand("eval", "Cross-validated identification or personalized authentication");
  eval_args.add(eval);
  eval->add_option("--modality", eval_modality)->check(CLI::IsMember({"eeg", "key", "fused"}));
  eval->add_option("--model", eval_model)->check(CLI::IsMember({"cart", "forest", "knn", "lda"}));
  eval->add_option("--method", eval_method)->check(CLI::IsMember({"classify", "template"}));
  eval->add_option("--augment", eval_augment)->check(CLI::IsMember({"none", "jitter", "timew", "smote", "adasyn"}));
  eval->add_option("--folds", eval_folds);
  eval->add_option("--trees", eval_trees);
  eval->add_option("--top-k", eval_top_k, "Keep the k best-ranked features per fold");
  eval->add_option("--subject", eval_subject, "Personalized authentication for this subject");
  eval->add_option("--out", eval_out, "Report JSON (stdout when omitted)");
  eval->add_option("--confusion", eval_confusion, "Confusion matrix TSV");
  eval->add_option("--roc", eval_roc, "ROC points TSV");
  eval->add_flag("--timing", eval_timing, "Include wall-clock timings in the report");

  // template
  DataArgs tmpl_args;
  std::string tmpl_modality = "key", tmpl_gallery, tmpl_cmc, tmpl_curve, tmpl_out;
  std::size_t tmpl_folds = 5;
  auto* tmpl = app.add_subcommand("template", "Binary template identification (CMC) and verification (EER)");
  tmpl_args.add(tmpl);
  tmpl->add_option("--modality", tmpl_modality)->check(CLI::IsMember({"eeg", "key", "fused"}));
  tmpl->add_option("--folds", tmpl_folds);
  tmpl->add_option("--out", tmpl_out, "Summary JSON (stdout when omitted)");
  tmpl->add_option("--gallery", tmpl_gallery, "Write a gallery built from all rows");
  tmpl->add_option("--cmc", tmpl_cmc, "CMC TSV");
  tmpl->add_option("--far-frr", tmpl_curve, "Pooled FAR/FRR TSV");

  // bench
  DataArgs bench_args;
  std::string bench_modality = "eeg";
  std::size_t bench_queries = 1000, bench_trees = 500;
  auto* bench = app.add_subcommand("bench", "Per-query latency: template matching versus forest prediction");
  bench_args.add(bench);
  bench->add_option("--modality", bench_modality)->check(CLI::IsMember({"eeg", "key", "fused"}));
  bench->add_option("--queries", bench_queries);
  bench->add_option("--trees", bench_trees);

  // serve
  service::ServiceConfig serve_cfg;
  auto* serve = app.add_subcommand("serve", "Run the enrollment/authentication HTTP service");
  serve->add_option("--port", serve_cfg.port);
  serve->add_option("--host", serve_cfg.host);
  serve->add_option("--state-dir", serve_cfg.state_dir);
  serve->add_option("--static-dir", serve_cfg.static_dir, "Directory served at /");
  serve->add_option("--seed", serve_cfg.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      dataio::synth_dataset(synth_args.manifest(), synth_out);
      std::cerr << "wrote " << synth_args.manifest().total_trials() << " trials to " << synth_out << "\n";
    } else if (*extract) {
      const auto data = extract_args.load();
      fs::create_directories(extract_out);
      auto eeg = data.eeg;
      auto key = data.key;
      if (extract_normalize) {
        auto [ne, se] = features::minmax_normalize(eeg);
        auto [nk, sk] = features::minmax_normalize(key);
        eeg = std::move(ne);
        eeg.norm_stats = se;
        key = std::move(nk);
        key.norm_stats = sk;
      }
      dataio::write_feature_matrix(eeg, fs::path(extract_out) / "eeg.csv");
      dataio::write_feature_matrix(key, fs::path(extract_out) / "key.csv");
    } else if (*rank) {
      const auto data = rank_args.load();
      const auto& m = rank_modality == "eeg" ? data.eeg : data.key;
      auto [norm, stats] = features::minmax_normalize(m);
      auto [pruned, dropped] = select::prune_correlated(norm);
      const auto y = data.subjects();
      const auto model = learn::Model::fit(model_spec("forest", rank_trees, rank_args.seed), pruned.rows, y);
      auto ranking = select::gini_importance(*model.forest(), pruned.feature_names);
      ranking.pruned = std::move(dropped);
      write_text(rank_out, select::ranking_to_json(ranking));
      if (!rank_tsv.empty()) write_text(rank_tsv, select::ranking_to_tsv(ranking));
    } else if (*train) {
      const auto data = train_args.load();
      const auto& m = train_modality == "eeg" ? data.eeg : data.key;
      auto [norm, stats] = features::minmax_normalize(m);
      const auto model = learn::Model::fit(model_spec(train_model, train_trees, train_args.seed), norm.rows,
                                           data.subjects());
      write_text(train_out, model.to_json());
    } else if (*eval) {
      const auto data = eval_args.load();
      const auto modality = pipeline::modality_from_string(eval_modality);
      learn::CVSpec cv;
      cv.n_folds = eval_folds;
      cv.seed = eval_args.seed;
      if (eval_method == "template") {
        write_text(eval_out, pipeline::template_to_json(pipeline::run_template(data, modality, cv)));
        return 0;
      }
      const auto spec = model_spec(eval_model, eval_trees, eval_args.seed);
      learn::EvalReport report;
      if (eval_subject) {
        std::optional<pipeline::AugmentSpec> aug;
        if (eval_augment != "none") {
          aug = pipeline::AugmentSpec{};
          aug->method = augment::method_from_string(eval_augment);
          aug->seed = eval_args.seed;
        }
        report = pipeline::run_personalized(data, *eval_subject, modality, spec, cv, aug).report;
      } else {
        pipeline::SelectionSpec sel;
        sel.top_k = eval_top_k;
        report = pipeline::run_identification(data, modality, spec, cv, sel);
      }
      write_text(eval_out, learn::report_to_json(report, eval_timing));
      if (!eval_confusion.empty()) write_text(eval_confusion, learn::confusion_to_tsv(report));
      if (!eval_roc.empty()) write_text(eval_roc, learn::roc_to_tsv(report));
    } else if (*tmpl) {
      const auto data = tmpl_args.load();
      const auto modality = pipeline::modality_from_string(tmpl_modality);
      learn::CVSpec cv;
      cv.n_folds = tmpl_folds;
      cv.seed = tmpl_args.seed;
      const auto r = pipeline::run_template(data, modality, cv);
      write_text(tmpl_out, pipeline::template_to_json(r));
      if (!tmpl_cmc.empty()) write_text(tmpl_cmc, matcher::cmc_to_tsv(r.cmc));
      if (!tmpl_curve.empty()) write_text(tmpl_curve, matcher::error_curve_to_tsv(r.pooled));
      if (!tmpl_gallery.empty())
        write_text(tmpl_gallery, matcher::gallery_to_json(matcher::build_gallery(pipeline::modality_matrix(data, modality))));
    } else if (*bench) {
      const auto data = bench_args.load();
      learn::CVSpec cv;
      cv.seed = bench_args.seed;
      const auto r = pipeline::bench_latency(data, pipeline::modality_from_string(bench_modality),
                                             model_spec("forest", bench_trees, bench_args.seed), cv, bench_queries);
      std::cout << "queries\t" << r.queries << "\n"
                << "template_ns_per_query\t" << r.template_ns << "\n"
                << "forest_ns_per_query\t" << r.forest_ns << "\n"
                << "ratio\t" << r.ratio() << "\n"
                << "template_rank1\t" << r.template_rank1 << "\n"
                << "forest_accuracy\t" << r.forest_accuracy << "\n";
    } else if (*serve) {
      service::Service svc(serve_cfg);
      std::cerr << "listening on http://" << serve_cfg.host << ":" << serve_cfg.port << "\n";
      svc.listen();
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  }
  return 0;
}
