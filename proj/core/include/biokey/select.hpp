#pragma once

#include <string>
#include <utility>
#include <vector>

#include "biokey/dataio.hpp"
#include "biokey/learn.hpp"

namespace biokey::select {

inline constexpr double kCorrelationThreshold = 0.95;
/// Accuracy tolerance (fraction) used to locate the saturation point.
inline constexpr double kSaturationTolerance = 0.005;

struct PrunedFeature {
  std::string name;
  std::string partner;
  double abs_r = 0.0;
};

struct FeatureRanking {
  std::vector<std::pair<std::string, double>> ranked;  // descending importance
  std::vector<PrunedFeature> pruned;
  /// No split anywhere in the forest; all importances are zero.
  bool degenerate = false;

  std::vector<std::string> top(std::size_t k) const;
};

struct PruneResult {
  std::vector<std::size_t> kept;  // ascending column indices
  std::vector<PrunedFeature> pruned;
};

/// Absolute Pearson correlation; columns with zero variance correlate 0.
Matrix abs_correlation(const Matrix& rows);

/// Sweeps pairs in descending |r| and drops, from each surviving pair with
/// |r| > threshold, the member with the larger mean |r| to the remaining
/// features (ties drop the later column).
PruneResult prune_correlated(const Matrix& rows, const std::vector<std::string>& names,
                             double threshold = kCorrelationThreshold);
std::pair<FeatureMatrix, std::vector<PrunedFeature>> prune_correlated(const FeatureMatrix& m,
                                                                      double threshold = kCorrelationThreshold);

/// Gini impurity of a class-count vector.
double gini(std::span<const std::uint32_t> counts);

/// Raw (unnormalized) mean-decrease-impurity per feature, averaged over trees.
std::vector<double> impurity_decrease(const learn::ForestModel& forest);

/// Mean decrease impurity normalized to sum to one, sorted descending
/// (ties by feature index). Throws State when the forest has no trees.
FeatureRanking gini_importance(const learn::ForestModel& forest, const std::vector<std::string>& names);

struct SweepResult {
  std::vector<std::size_t> k;
  std::vector<double> accuracy;
  std::size_t best_k = 0;
  std::vector<std::size_t> clipped;  // grid values above the feature count
};

/// Smallest grid value whose accuracy is within tolerance of the best.
std::size_t saturation_point(const std::vector<std::size_t>& k, const std::vector<double>& accuracy,
                             double tolerance = kSaturationTolerance);

/// Accuracy of the top-k ranked features for each k under cross-validation.
SweepResult sweep_top_k(const FeatureMatrix& m, std::span<const int> labels, const FeatureRanking& ranking,
                        const std::vector<std::size_t>& k_grid, const learn::CVSpec& cv,
                        const learn::ModelSpec& model);

/// Same sweep evaluated on a single train/validation split.
SweepResult sweep_top_k_holdout(const FeatureMatrix& train, std::span<const int> train_labels,
                                const FeatureMatrix& validation, std::span<const int> validation_labels,
                                const FeatureRanking& ranking, const std::vector<std::size_t>& k_grid,
                                const learn::ModelSpec& model);

std::vector<std::size_t> column_indices(const std::vector<std::string>& names, const std::vector<std::string>& wanted);

std::string ranking_to_json(const FeatureRanking& ranking);
std::string ranking_to_tsv(const FeatureRanking& ranking);

}  // namespace biokey::select
