#include "biokey/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "biokey/error.hpp"

namespace biokey::select {

std::vector<std::string> FeatureRanking::top(std::size_t k) const {
  k = std::min(k, ranked.size());
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(ranked[i].first);
  return out;
}

Matrix abs_correlation(const Matrix& rows) {
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  // Sums run over rows in lexicographic order so the result does not
  // depend on how the rows were ordered on input.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    auto ra = rows.row(a);
    auto rb = rows.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });

  Matrix centered(n, d);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (auto r : order) mean += rows(r, c);
    mean /= static_cast<double>(std::max<std::size_t>(n, 1));
    for (std::size_t i = 0; i < n; ++i) centered(i, c) = rows(order[i], c) - mean;
  }
  std::vector<double> ss(d, 0.0);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t i = 0; i < n; ++i) ss[c] += centered(i, c) * centered(i, c);

  Matrix out(d, d, 0.0);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      if (ss[a] <= 0.0 || ss[b] <= 0.0) continue;
      double cross = 0.0;
      for (std::size_t i = 0; i < n; ++i) cross += centered(i, a) * centered(i, b);
      const double r = std::min(1.0, std::abs(cross) / std::sqrt(ss[a] * ss[b]));
      out(a, b) = r;
      out(b, a) = r;
    }
  }
  return out;
}

PruneResult prune_correlated(const Matrix& rows, const std::vector<std::string>& names, double threshold) {
  const std::size_t d = rows.cols();
  if (names.size() != d) fail(ErrorCode::Parameter, "feature names do not match the column count");
  if (!(threshold > 0.0 && threshold <= 1.0)) fail(ErrorCode::Parameter, "correlation threshold must be in (0, 1]");
  const Matrix r = abs_correlation(rows);

  struct Pair {
    double r;
    std::size_t a, b;
  };
  std::vector<Pair> pairs;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b)
      if (r(a, b) > threshold) pairs.push_back({r(a, b), a, b});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    if (x.r != y.r) return x.r > y.r;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  std::vector<bool> alive(d, true);
  std::size_t n_alive = d;
  auto mean_abs_r = [&](std::size_t f) {
    double sum = 0.0;
    for (std::size_t g = 0; g < d; ++g)
      if (g != f && alive[g]) sum += r(f, g);
    return n_alive > 1 ? sum / static_cast<double>(n_alive - 1) : 0.0;
  };

  PruneResult out;
  for (const auto& p : pairs) {
    if (!alive[p.a] || !alive[p.b]) continue;
    const double ma = mean_abs_r(p.a);
    const double mb = mean_abs_r(p.b);
    const bool drop_a = ma > mb;
    const std::size_t drop = drop_a ? p.a : p.b;
    const std::size_t keep = drop_a ? p.b : p.a;
    alive[drop] = false;
    --n_alive;
    out.pruned.push_back({names[drop], names[keep], p.r});
  }
  for (std::size_t f = 0; f < d; ++f)
    if (alive[f]) out.kept.push_back(f);
  return out;
}

std::pair<FeatureMatrix, std::vector<PrunedFeature>> prune_correlated(const FeatureMatrix& m, double threshold) {
  auto result = prune_correlated(m.rows, m.feature_names, threshold);
  return {m.select_cols(result.kept), std::move(result.pruned)};
}

double gini(std::span<const std::uint32_t> counts) {
  double total = 0.0;
  for (auto c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double g = 0.0;
  for (auto c : counts) {
    const double p = c / total;
    g += p * (1.0 - p);
  }
  return g;
}

std::vector<double> impurity_decrease(const learn::ForestModel& forest) {
  if (forest.trees.empty()) fail(ErrorCode::State, "forest has not been trained");
  std::vector<double> total(forest.n_features, 0.0);
  std::vector<double> per_tree(forest.n_features);
  for (const auto& tree : forest.trees) {
    std::fill(per_tree.begin(), per_tree.end(), 0.0);
    const std::size_t k = tree.n_classes;
    auto counts = [&](std::size_t node) {
      return std::span<const std::uint32_t>(tree.counts.data() + node * k, k);
    };
    const double root = tree.node_total(0);
    for (std::size_t m = 0; m < tree.node_count(); ++m) {
      if (tree.is_leaf(m)) continue;
      const auto l = static_cast<std::size_t>(tree.left[m]);
      const auto rr = static_cast<std::size_t>(tree.right[m]);
      const double n_m = tree.node_total(m);
      const double w = n_m / root;
      const double delta = gini(counts(m)) - (tree.node_total(l) / n_m) * gini(counts(l)) -
                           (tree.node_total(rr) / n_m) * gini(counts(rr));
      per_tree[static_cast<std::size_t>(tree.feature[m])] += w * delta;
    }
    for (std::size_t f = 0; f < total.size(); ++f) total[f] += per_tree[f];
  }
  for (auto& v : total) v /= static_cast<double>(forest.trees.size());
  return total;
}

FeatureRanking gini_importance(const learn::ForestModel& forest, const std::vector<std::string>& names) {
  if (names.size() != forest.n_features) fail(ErrorCode::Parameter, "feature names do not match the forest");
  auto imp = impurity_decrease(forest);
  const double sum = std::accumulate(imp.begin(), imp.end(), 0.0);
  FeatureRanking out;
  if (sum > 0.0) {
    for (auto& v : imp) v /= sum;
  } else {
    std::fill(imp.begin(), imp.end(), 0.0);
    out.degenerate = true;
  }
  std::vector<std::size_t> order(imp.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
  for (auto f : order) out.ranked.emplace_back(names[f], imp[f]);
  return out;
}

std::size_t saturation_point(const std::vector<std::size_t>& k, const std::vector<double>& accuracy,
                             double tolerance) {
  if (k.empty() || k.size() != accuracy.size()) fail(ErrorCode::Parameter, "sweep needs matching k and accuracy");
  const double best = *std::max_element(accuracy.begin(), accuracy.end());
  std::size_t chosen = 0;
  bool found = false;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (accuracy[i] >= best - tolerance && (!found || k[i] < chosen)) {
      chosen = k[i];
      found = true;
    }
  }
  return chosen;
}

std::vector<std::size_t> column_indices(const std::vector<std::string>& names, const std::vector<std::string>& wanted) {
  std::vector<std::size_t> out;
  out.reserve(wanted.size());
  for (const auto& w : wanted) {
    auto it = std::find(names.begin(), names.end(), w);
    if (it == names.end()) fail(ErrorCode::NotFound, "unknown feature: " + w);
    out.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  return out;
}

namespace {

std::vector<std::size_t> effective_grid(const std::vector<std::size_t>& grid, std::size_t d, SweepResult& out) {
  if (grid.empty()) fail(ErrorCode::Parameter, "empty k grid");
  std::vector<std::size_t> ks;
  for (auto k : grid) {
    if (k == 0) fail(ErrorCode::Parameter, "k must be positive");
    if (k > d) out.clipped.push_back(k);
    const auto c = std::min(k, d);
    if (std::find(ks.begin(), ks.end(), c) == ks.end()) ks.push_back(c);
  }
  std::sort(ks.begin(), ks.end());
  return ks;
}

double accuracy_of(const std::vector<int>& pred, std::span<const int> truth) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == truth[i];
  return pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace

SweepResult sweep_top_k(const FeatureMatrix& m, std::span<const int> labels, const FeatureRanking& ranking,
                        const std::vector<std::size_t>& k_grid, const learn::CVSpec& cv,
                        const learn::ModelSpec& model) {
  if (labels.size() != m.size()) fail(ErrorCode::Parameter, "labels do not match rows");
  SweepResult out;
  const auto ks = effective_grid(k_grid, ranking.ranked.size(), out);
  const auto plan = learn::stratified_folds(labels, cv);
  for (auto k : ks) {
    const auto cols = column_indices(m.feature_names, ranking.top(k));
    const Matrix x = m.rows.select_cols(cols);
    std::size_t hit = 0;
    for (std::size_t f = 0; f < plan.n_folds; ++f) {
      const auto train = plan.train_rows(f);
      const auto test = plan.test_rows(f);
      std::vector<int> y_train;
      for (auto r : train) y_train.push_back(labels[r]);
      const auto fitted = learn::Model::fit(model, x.select_rows(train), y_train);
      const auto pred = fitted.predict(x.select_rows(test));
      for (std::size_t i = 0; i < test.size(); ++i) hit += pred[i] == labels[test[i]];
    }
    out.k.push_back(k);
    out.accuracy.push_back(static_cast<double>(hit) / static_cast<double>(labels.size()));
  }
  out.best_k = saturation_point(out.k, out.accuracy);
  return out;
}

SweepResult sweep_top_k_holdout(const FeatureMatrix& train, std::span<const int> train_labels,
                                const FeatureMatrix& validation, std::span<const int> validation_labels,
                                const FeatureRanking& ranking, const std::vector<std::size_t>& k_grid,
                                const learn::ModelSpec& model) {
  SweepResult out;
  const auto ks = effective_grid(k_grid, ranking.ranked.size(), out);
  for (auto k : ks) {
    const auto names = ranking.top(k);
    const auto fitted =
        learn::Model::fit(model, train.rows.select_cols(column_indices(train.feature_names, names)), train_labels);
    const auto pred = fitted.predict(validation.rows.select_cols(column_indices(validation.feature_names, names)));
    out.k.push_back(k);
    out.accuracy.push_back(accuracy_of(pred, validation_labels));
  }
  out.best_k = saturation_point(out.k, out.accuracy);
  return out;
}

std::string ranking_to_json(const FeatureRanking& ranking) {
  nlohmann::ordered_json j;
  j["degenerate"] = ranking.degenerate;
  auto& ranked = j["ranked"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ranking.ranked.size(); ++i) {
    ranked.push_back({{"rank", i + 1}, {"feature", ranking.ranked[i].first}, {"importance", ranking.ranked[i].second}});
  }
  auto& pruned = j["pruned"] = nlohmann::ordered_json::array();
  for (const auto& p : ranking.pruned) pruned.push_back({{"feature", p.name}, {"partner", p.partner}, {"abs_r", p.abs_r}});
  return j.dump(2) + "\n";
}

std::string ranking_to_tsv(const FeatureRanking& ranking) {
  std::ostringstream os;
  os.precision(17);
  os << "rank\tfeature\timportance\n";
  for (std::size_t i = 0; i < ranking.ranked.size(); ++i)
    os << i + 1 << '\t' << ranking.ranked[i].first << '\t' << ranking.ranked[i].second << '\n';
  return os.str();
}

}  // namespace biokey::select
