// Decision-tree growth and forest training.
#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "biokey/error.hpp"
#include "biokey/learn.hpp"
#include "biokey/random.hpp"

namespace biokey::learn {

std::uint32_t Tree::node_total(std::size_t node) const {
  std::uint32_t total = 0;
  for (std::size_t c = 0; c < n_classes; ++c) total += counts[node * n_classes + c];
  return total;
}

std::size_t Tree::leaf_for(std::span<const double> x) const {
  std::size_t node = 0;
  while (feature[node] >= 0) {
    node = static_cast<std::size_t>(x[static_cast<std::size_t>(feature[node])] <= threshold[node] ? left[node]
                                                                                                 : right[node]);
  }
  return node;
}

std::size_t Tree::depth() const {
  if (feature.empty()) return 0;
  std::vector<std::size_t> level(feature.size(), 0);
  std::size_t deepest = 0;
  // Children are always created after their parent.
  for (std::size_t i = 0; i < feature.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (feature[i] >= 0) {
      level[static_cast<std::size_t>(left[i])] = level[i] + 1;
      level[static_cast<std::size_t>(right[i])] = level[i] + 1;
    }
  }
  return deepest;
}

namespace {

struct SplitChoice {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double score = -1.0;
};

class TreeGrower {
 public:
  TreeGrower(const Matrix& x, std::span<const int> y, std::size_t n_classes, const TreeParams& params,
             std::uint64_t seed)
      : x_(x), y_(y), n_classes_(n_classes), params_(params), rng_(seed) {
    tree_.n_classes = n_classes;
    features_.resize(x.cols());
    std::iota(features_.begin(), features_.end(), 0);
    left_counts_.resize(n_classes);
    right_counts_.resize(n_classes);
  }

  Tree grow(std::span<const std::size_t> samples) {
    // Bootstrap repeats become per-row weights; the sums match the
    // repeated-sample form exactly.
    weight_.assign(x_.rows(), 0);
    for (auto s : samples) {
      if (weight_[s]++ == 0) samples_.push_back(s);
    }
    std::sort(samples_.begin(), samples_.end());
    struct Pending {
      std::size_t node;
      std::size_t begin;
      std::size_t end;
    };
    std::vector<Pending> stack;
    stack.push_back({add_node(0, samples_.size()), 0, samples_.size()});
    while (!stack.empty()) {
      const auto p = stack.back();
      stack.pop_back();
      const auto split = find_split(p.node, p.begin, p.end);
      if (split.feature < 0) continue;

      const auto f = static_cast<std::size_t>(split.feature);
      auto first = samples_.begin() + static_cast<std::ptrdiff_t>(p.begin);
      auto last = samples_.begin() + static_cast<std::ptrdiff_t>(p.end);
      auto mid = std::stable_partition(first, last, [&](std::size_t s) { return x_(s, f) <= split.threshold; });
      const auto mid_index = static_cast<std::size_t>(mid - samples_.begin());

      tree_.feature[p.node] = split.feature;
      tree_.threshold[p.node] = split.threshold;
      const auto l = add_node(p.begin, mid_index);
      const auto r = add_node(mid_index, p.end);
      tree_.left[p.node] = static_cast<std::int32_t>(l);
      tree_.right[p.node] = static_cast<std::int32_t>(r);
      // Right pushed first so the left subtree is expanded first.
      stack.push_back({r, mid_index, p.end});
      stack.push_back({l, p.begin, mid_index});
    }
    return std::move(tree_);
  }

 private:
  std::size_t add_node(std::size_t begin, std::size_t end) {
    const std::size_t id = tree_.feature.size();
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    const auto base = tree_.counts.size();
    tree_.counts.resize(base + n_classes_, 0);
    tree_.distribution.resize(base + n_classes_, 0.0);
    std::uint32_t total_weight = 0;
    for (std::size_t i = begin; i < end; ++i) {
      tree_.counts[base + static_cast<std::size_t>(y_[samples_[i]])] += weight_[samples_[i]];
      total_weight += weight_[samples_[i]];
    }
    const double total = static_cast<double>(total_weight);
    for (std::size_t c = 0; c < n_classes_; ++c) {
      tree_.distribution[base + c] = total > 0 ? tree_.counts[base + c] / total : 0.0;
    }
    return id;
  }

  SplitChoice find_split(std::size_t node, std::size_t begin, std::size_t end) {
    SplitChoice best;
    const std::size_t m = tree_.node_total(node);
    if (m < params_.min_samples_split || m < 2 || end - begin < 2) return best;
    std::size_t nonzero = 0;
    for (std::size_t c = 0; c < n_classes_; ++c) nonzero += tree_.counts[node * n_classes_ + c] > 0;
    if (nonzero <= 1) return best;  // pure

    const std::size_t d = features_.size();
    const std::size_t mtry = (params_.max_features == 0 || params_.max_features >= d) ? d : params_.max_features;
    if (mtry == d) {
      for (std::size_t f = 0; f < d; ++f) evaluate_feature(f, begin, end, best);
      return best;
    }
    // Fresh random candidate subset; searched in ascending feature order so
    // ties resolve to the lower index. If no candidate can split (all
    // constant on this node), keep drawing from the remaining features.
    for (std::size_t i = 0; i < d - 1; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(d - i));
      std::swap(features_[i], features_[j]);
    }
    std::size_t taken = 0;
    while (taken < d && best.feature < 0) {
      const std::size_t batch = taken == 0 ? mtry : 1;
      std::vector<std::size_t> candidates(features_.begin() + static_cast<std::ptrdiff_t>(taken),
                                          features_.begin() + static_cast<std::ptrdiff_t>(std::min(d, taken + batch)));
      std::sort(candidates.begin(), candidates.end());
      for (auto f : candidates) evaluate_feature(f, begin, end, best);
      taken += batch;
    }
    return best;
  }

  void evaluate_feature(std::size_t f, std::size_t begin, std::size_t end, SplitChoice& best) {
    const std::size_t m = end - begin;
    column_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto s = samples_[begin + i];
      column_[i] = {x_(s, f), y_[s], static_cast<double>(weight_[s])};
    }
    std::sort(column_.begin(), column_.end(), [](const Entry& a, const Entry& b) {
      return a.value < b.value || (a.value == b.value && a.label < b.label);
    });
    if (!(column_.front().value < column_.back().value)) return;

    std::fill(left_counts_.begin(), left_counts_.end(), 0.0);
    std::fill(right_counts_.begin(), right_counts_.end(), 0.0);
    double total = 0.0;
    for (const auto& e : column_) {
      right_counts_[static_cast<std::size_t>(e.label)] += e.weight;
      total += e.weight;
    }
    double left_sq = 0.0;
    double right_sq = 0.0;
    for (double r : right_counts_) right_sq += r * r;

    double n_left = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const auto c = static_cast<std::size_t>(column_[i].label);
      const double w = column_[i].weight;
      // Incremental update of the sums of squared class counts.
      left_sq += (2.0 * left_counts_[c] + w) * w;
      left_counts_[c] += w;
      right_sq -= (2.0 * right_counts_[c] - w) * w;
      right_counts_[c] -= w;
      n_left += w;
      if (column_[i].value == column_[i + 1].value) continue;
      // Maximizing this is equivalent to minimizing the weighted child Gini impurity.
      const double score = left_sq / n_left + right_sq / (total - n_left);
      if (score > best.score) {
        double threshold = 0.5 * (column_[i].value + column_[i + 1].value);
        if (threshold >= column_[i + 1].value) threshold = column_[i].value;
        best = {static_cast<std::int32_t>(f), threshold, score};
      }
    }
  }

  struct Entry {
    double value;
    int label;
    double weight;
  };

  const Matrix& x_;
  std::span<const int> y_;
  std::size_t n_classes_;
  TreeParams params_;
  Rng rng_;
  Tree tree_;
  std::vector<std::size_t> samples_;
  std::vector<std::size_t> features_;
  std::vector<std::uint32_t> weight_;
  std::vector<Entry> column_;
  std::vector<double> left_counts_;
  std::vector<double> right_counts_;
};

}  // namespace

Tree grow_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes, std::span<const std::size_t> samples,
               const TreeParams& params, std::uint64_t seed) {
  if (samples.empty()) fail(ErrorCode::InsufficientData, "cannot grow a tree without samples");
  TreeGrower grower(x, y, n_classes, params, seed);
  return grower.grow(samples);
}

ForestModel fit_forest(const Matrix& x, std::span<const int> y_index, std::size_t n_classes, const ModelSpec& spec) {
  if (x.rows() == 0) fail(ErrorCode::InsufficientData, "cannot fit a forest on zero rows");
  if (spec.n_trees == 0) fail(ErrorCode::Parameter, "forest needs at least one tree");
  ForestModel forest;
  forest.n_classes = n_classes;
  forest.n_features = x.cols();
  forest.n_trees = spec.n_trees;
  forest.min_samples_split = spec.min_samples_split;
  forest.bootstrap = spec.bootstrap;
  forest.seed = spec.seed;
  forest.max_features =
      spec.feature_subsampling ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.cols())))) : 0;
  forest.trees.resize(spec.n_trees);

  const TreeParams params{forest.max_features, spec.min_samples_split};
  const std::size_t n = x.rows();
  auto build = [&](std::size_t t) {
    const auto tree_seed = derive_seed(spec.seed, {t});
    std::vector<std::size_t> samples(n);
    if (spec.bootstrap) {
      Rng rng(derive_seed(tree_seed, {0}));
      for (auto& s : samples) s = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    forest.trees[t] = grow_tree(x, y_index, n_classes, samples, params, derive_seed(tree_seed, {1}));
  };

  const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), spec.n_trees);
  if (workers <= 1) {
    for (std::size_t t = 0; t < spec.n_trees; ++t) build(t);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < spec.n_trees; t += workers) build(t);
      });
    }
  }
  return forest;
}

}  // namespace biokey::learn
