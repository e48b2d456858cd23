#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "biokey/augment.hpp"
#include "biokey/dataio.hpp"
#include "biokey/dsp.hpp"
#include "biokey/features.hpp"
#include "biokey/learn.hpp"
#include "biokey/matcher.hpp"
#include "biokey/select.hpp"

namespace biokey::pipeline {

enum class Modality { Eeg, Key, Fused };

std::string to_string(Modality m);
Modality modality_from_string(const std::string& name);

/// Feature rows for both modalities, aligned by row. `trials` keeps the
/// preprocessed signals when available (needed for raw-signal augmentation).
struct Dataset {
  std::vector<TrialSample> trials;
  FeatureMatrix eeg;
  FeatureMatrix key;
  WaveletScheme scheme = WaveletScheme::Wpt18;

  std::size_t size() const { return eeg.size(); }
  std::vector<int> subjects() const;  // per row
  std::vector<int> subject_ids() const;  // distinct, ascending
};

struct DatasetOptions {
  WaveletScheme scheme = WaveletScheme::Wpt18;
  dsp::PreprocessConfig preprocess;
  bool keep_trials = true;
};

Dataset build_dataset(std::vector<TrialSample> trials, const DatasetOptions& options = {});
/// Generates, preprocesses and extracts every trial of the manifest in memory.
Dataset synth_dataset(const DatasetManifest& manifest, const DatasetOptions& options = {});
/// Reads a dataset directory written by dataio::synth_dataset (or recorded
/// in the same layout).
Dataset load_dataset(const std::filesystem::path& dir, const DatasetOptions& options = {});
/// Pairs previously extracted matrices; labels must agree row by row.
Dataset from_feature_matrices(FeatureMatrix eeg, FeatureMatrix key);

struct SelectionSpec {
  std::optional<std::size_t> top_k;
  /// Used when top_k is unset; chosen on the validation part of each training split.
  std::vector<std::size_t> sweep_grid;
  double prune_threshold = select::kCorrelationThreshold;

  bool enabled() const { return top_k.has_value() || !sweep_grid.empty(); }
};

/// Everything learned from the training rows of one fold for one modality.
struct ModalityArtifacts {
  NormStats norm;
  std::vector<std::string> features;  // columns given to the model
  std::optional<select::FeatureRanking> ranking;
  std::optional<select::SweepResult> sweep;
  learn::Model model;

  friend bool operator==(const ModalityArtifacts& a, const ModalityArtifacts& b);
};

/// Normalizes, optionally prunes/ranks/selects, and fits on the training
/// rows of `fold`. Test rows of that fold are never read.
ModalityArtifacts fit_modality(const FeatureMatrix& m, std::span<const int> y, const learn::FoldPlan& plan,
                               std::size_t fold, const learn::ModelSpec& model, const SelectionSpec& selection);

/// Class probabilities for `rows` of `m` (columns follow `classes`).
Matrix predict_modality(const ModalityArtifacts& a, const FeatureMatrix& m, std::span<const std::size_t> rows,
                        std::span<const int> classes);

struct FoldArtifacts {
  std::optional<ModalityArtifacts> eeg;
  std::optional<ModalityArtifacts> key;
};

struct IdentificationResult {
  std::optional<learn::EvalReport> eeg;
  std::optional<learn::EvalReport> key;
  std::optional<learn::EvalReport> fused;
  std::vector<FoldArtifacts> folds;
  learn::FoldPlan plan;
};

/// One pass over the folds producing the reports for the requested
/// modalities; Fused implies both single modalities.
IdentificationResult run_identification_all(const Dataset& data, const std::vector<Modality>& modalities,
                                            const learn::ModelSpec& model, const learn::CVSpec& cv,
                                            const SelectionSpec& selection = {});
learn::EvalReport run_identification(const Dataset& data, Modality modality, const learn::ModelSpec& model,
                                     const learn::CVSpec& cv, const SelectionSpec& selection = {});

std::string identification_to_json(const IdentificationResult& r, bool include_timing = false);

struct AugmentSpec {
  augment::Method method = augment::Method::None;
  double sigma = augment::kDefaultSigma;
  std::size_t k = augment::kDefaultNeighbors;
  /// Genuine rows per training fold after augmentation; defaults to the imposter count.
  std::optional<std::size_t> target_count;
  std::uint64_t seed = 0;
};

inline constexpr int kGenuine = 1;
inline constexpr int kImposter = 0;
/// Fused personalized decision: genuine iff p_eeg + p_key >= this.
inline constexpr double kFusedGenuineThreshold = 1.0;

struct PersonalizedFold {
  std::size_t train_genuine = 0;
  std::size_t train_imposter = 0;
  std::size_t synthetic = 0;
  std::size_t test_genuine = 0;
  std::size_t test_imposter = 0;
  bool uniform_fallback = false;
};

struct PersonalizedResult {
  int subject = 0;
  learn::EvalReport report;  // positive class = genuine
  std::vector<PersonalizedFold> folds;
};

PersonalizedResult run_personalized(const Dataset& data, int subject, Modality modality,
                                    const learn::ModelSpec& model, const learn::CVSpec& cv,
                                    const std::optional<AugmentSpec>& augment = std::nullopt);

/// Feature matrix used by template matching for a modality (fused concatenates).
FeatureMatrix modality_matrix(const Dataset& data, Modality modality);

struct TemplateResult {
  matcher::CmcResult cmc;
  matcher::ErrorCurve pooled;
  std::map<int, matcher::ErrorCurve> per_subject;
  double mean_subject_eer = 0.0;
  std::vector<double> fold_rank1;
};

/// Train folds are the gallery, test folds the probes.
TemplateResult run_template(const Dataset& data, Modality modality, const learn::CVSpec& cv);
std::string template_to_json(const TemplateResult& r);

struct LatencyResult {
  std::size_t queries = 0;
  double template_ns = 0.0;  // mean per query
  double forest_ns = 0.0;    // mean per query
  double template_rank1 = 0.0;
  double forest_accuracy = 0.0;
  double ratio() const { return forest_ns > 0.0 ? template_ns / forest_ns : 0.0; }
};

/// Per-query latency of template identification versus forest prediction
/// on the same normalized feature vectors (first fold; test rows cycled
/// until `min_queries` queries have run). Single-threaded.
LatencyResult bench_latency(const Dataset& data, Modality modality, const learn::ModelSpec& model,
                            const learn::CVSpec& cv, std::size_t min_queries = 1000);

}  // namespace biokey::pipeline
