#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biokey/matrix.hpp"

namespace biokey::learn {

/// Binary decision tree stored as parallel node arrays. Leaves have
/// feature == -1. `counts` holds per-node class counts (bootstrap
/// multiplicities included), n_nodes x n_classes row-major.
struct Tree {
  std::vector<std::int32_t> feature;
  std::vector<double> threshold;
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<std::uint32_t> counts;
  std::vector<double> distribution;  // leaf class distribution, same layout as counts
  std::size_t n_classes = 0;

  std::size_t node_count() const { return feature.size(); }
  bool is_leaf(std::size_t node) const { return feature[node] < 0; }
  std::uint32_t node_total(std::size_t node) const;
  std::size_t leaf_for(std::span<const double> x) const;
  std::size_t depth() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

struct TreeParams {
  /// Candidate features per split; 0 means all.
  std::size_t max_features = 0;
  std::size_t min_samples_split = 2;
};

/// Grows a tree by exhaustive best-Gini splits at midpoints between
/// consecutive distinct values. `samples` may repeat rows (bootstrap).
/// Ties prefer the lower feature index, then the lower threshold.
Tree grow_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes, std::span<const std::size_t> samples,
               const TreeParams& params, std::uint64_t seed);

/// Ensemble of trees with its hyperparameters.
struct ForestModel {
  std::vector<Tree> trees;
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  std::size_t n_trees = 500;
  std::size_t max_features = 0;
  std::size_t min_samples_split = 2;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

enum class ModelKind { Cart, Forest, Knn, Lda };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::Forest;
  std::size_t n_trees = 500;
  std::size_t min_samples_split = 2;
  bool bootstrap = true;
  /// When false, every split searches all features (test hook).
  bool feature_subsampling = true;
  std::size_t knn_k = 5;
  double lda_ridge = 1e-6;
  std::uint64_t seed = 0;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// A fitted classifier. Class labels are arbitrary integers; probability
/// columns follow `classes()` (ascending).
class Model {
 public:
  static Model fit(const ModelSpec& spec, const Matrix& x, std::span<const int> y);

  Matrix predict_proba(const Matrix& x) const;
  std::vector<double> predict_proba_row(std::span<const double> x) const;
  std::vector<int> predict(const Matrix& x) const;

  const ModelSpec& spec() const { return spec_; }
  const std::vector<int>& classes() const { return classes_; }
  std::size_t n_features() const { return n_features_; }
  /// Single-class training data; the model always predicts that class.
  bool degenerate() const { return degenerate_; }
  /// Tree ensemble for Cart (one tree) and Forest models, else null.
  const ForestModel* forest() const { return forest_ ? &*forest_ : nullptr; }

  std::string to_json() const;
  static Model from_json(const std::string& text);

  friend bool operator==(const Model&, const Model&) = default;

 private:
  ModelSpec spec_;
  std::vector<int> classes_;
  std::size_t n_features_ = 0;
  bool degenerate_ = false;
  std::optional<ForestModel> forest_;
  // knn
  Matrix train_x_;
  std::vector<int> train_y_;  // class indices
  // lda
  Matrix lda_coef_;                 // n_classes x d
  std::vector<double> lda_offset_;  // n_classes
};

/// Forest fit with explicit hyperparameters. Trees are independent given
/// (seed, tree index), so the result does not depend on thread scheduling.
ForestModel fit_forest(const Matrix& x, std::span<const int> y_index, std::size_t n_classes, const ModelSpec& spec);

// ---------------------------------------------------------------------------
// Cross-validation

struct CVSpec {
  std::size_t n_folds = 5;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct FoldPlan {
  std::vector<std::size_t> fold_of_row;
  /// Per row, true when the row is in the validation subset of the
  /// training split of fold `f` (indexed [f][row]).
  std::vector<std::vector<bool>> validation;
  std::size_t n_folds = 0;

  std::vector<std::size_t> test_rows(std::size_t fold) const;
  std::vector<std::size_t> train_rows(std::size_t fold) const;
  std::vector<std::size_t> fit_rows(std::size_t fold) const;         // train minus validation
  std::vector<std::size_t> validation_rows(std::size_t fold) const;  // validation subset of train
};

FoldPlan stratified_folds(std::span<const int> labels, const CVSpec& spec);

// ---------------------------------------------------------------------------
// Fusion and metrics

struct FusionResult {
  std::vector<double> scores;
  std::size_t predicted = 0;  // index into the class set
};

/// Sum-rule score fusion; argmax with ties to the lower class index.
FusionResult fuse(std::span<const double> p_eeg, std::span<const double> p_key);
/// Row-wise fusion of two probability matrices over the same class set.
Matrix fuse(const Matrix& p_eeg, const Matrix& p_key);

struct RocCurve {
  int label = 0;
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

struct EvalReport {
  std::vector<int> classes;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set for binary reports; precision/recall/f1 then refer to this class.
  std::optional<int> positive_class;
  std::vector<double> class_precision;
  std::vector<double> class_recall;
  std::vector<double> class_f1;
  std::vector<int> classes_absent_from_truth;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::vector<RocCurve> roc;
  double macro_auc = 0.0;
  std::size_t n_samples = 0;

  // Aggregates across folds when produced by a CV run.
  std::vector<double> fold_accuracy;
  std::vector<double> fold_precision;
  std::vector<double> fold_recall;
  std::vector<double> fold_f1;

  // Wall-clock seconds; not part of the deterministic serialization.
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
  std::size_t predict_queries = 0;
};

/// Metrics from predicted class labels and per-class probabilities.
/// `probabilities` columns follow `classes`.
EvalReport evaluate(std::span<const int> predictions, const Matrix& probabilities, std::span<const int> truth,
                    std::span<const int> classes, std::optional<int> positive_class = std::nullopt);

std::string report_to_json(const EvalReport& report, bool include_timing = false);
std::string confusion_to_tsv(const EvalReport& report);
std::string roc_to_tsv(const EvalReport& report);

}  // namespace biokey::learn
