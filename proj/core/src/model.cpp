#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "biokey/error.hpp"
#include "biokey/learn.hpp"

namespace biokey::learn {

namespace {

using nlohmann::json;

constexpr int kModelFormatVersion = 1;

std::vector<double> softmax(std::vector<double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return z;
}

json tree_to_json(const Tree& t) {
  return json{{"feature", t.feature}, {"threshold", t.threshold}, {"left", t.left},
              {"right", t.right},     {"counts", t.counts},       {"n_classes", t.n_classes}};
}

Tree tree_from_json(const json& j) {
  Tree t;
  t.feature = j.at("feature").get<std::vector<std::int32_t>>();
  t.threshold = j.at("threshold").get<std::vector<double>>();
  t.left = j.at("left").get<std::vector<std::int32_t>>();
  t.right = j.at("right").get<std::vector<std::int32_t>>();
  t.counts = j.at("counts").get<std::vector<std::uint32_t>>();
  t.n_classes = j.at("n_classes").get<std::size_t>();
  t.distribution.resize(t.counts.size());
  for (std::size_t node = 0; node < t.feature.size(); ++node) {
    const double total = t.node_total(node);
    for (std::size_t c = 0; c < t.n_classes; ++c) {
      t.distribution[node * t.n_classes + c] = total > 0 ? t.counts[node * t.n_classes + c] / total : 0.0;
    }
  }
  return t;
}

json matrix_to_json(const Matrix& m) { return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}}; }

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.data() = j.at("data").get<std::vector<double>>();
  return m;
}

}  // namespace

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Cart: return "cart";
    case ModelKind::Forest: return "forest";
    case ModelKind::Knn: return "knn";
    case ModelKind::Lda: return "lda";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "cart") return ModelKind::Cart;
  if (name == "forest" || name == "rnf" || name == "rf") return ModelKind::Forest;
  if (name == "knn") return ModelKind::Knn;
  if (name == "lda") return ModelKind::Lda;
  fail(ErrorCode::Parameter, "unknown model '" + name + "'");
}

Model Model::fit(const ModelSpec& spec, const Matrix& x, std::span<const int> y) {
  if (x.rows() != y.size()) fail(ErrorCode::Parameter, "feature rows and labels differ in length");
  if (x.rows() == 0) fail(ErrorCode::InsufficientData, "cannot fit on zero rows");
  Model model;
  model.spec_ = spec;
  model.n_features_ = x.cols();
  model.classes_.assign(y.begin(), y.end());
  std::sort(model.classes_.begin(), model.classes_.end());
  model.classes_.erase(std::unique(model.classes_.begin(), model.classes_.end()), model.classes_.end());
  const std::size_t k = model.classes_.size();
  if (k == 1) {
    model.degenerate_ = true;
    return model;
  }
  std::vector<int> y_index(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y_index[i] = static_cast<int>(std::lower_bound(model.classes_.begin(), model.classes_.end(), y[i]) -
                                  model.classes_.begin());
  }

  switch (spec.kind) {
    case ModelKind::Cart: {
      ModelSpec cart = spec;
      cart.n_trees = 1;
      cart.bootstrap = false;
      cart.feature_subsampling = false;
      model.forest_ = fit_forest(x, y_index, k, cart);
      break;
    }
    case ModelKind::Forest:
      model.forest_ = fit_forest(x, y_index, k, spec);
      break;
    case ModelKind::Knn:
      if (spec.knn_k == 0) fail(ErrorCode::Parameter, "knn needs k >= 1");
      model.train_x_ = x;
      model.train_y_ = std::move(y_index);
      break;
    case ModelKind::Lda: {
      const std::size_t d = x.cols();
      const std::size_t n = x.rows();
      Eigen::MatrixXd means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
      std::vector<double> counts(k, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<Eigen::Index>(y_index[i]);
        counts[static_cast<std::size_t>(c)] += 1.0;
        for (std::size_t j = 0; j < d; ++j) means(c, static_cast<Eigen::Index>(j)) += x(i, j);
      }
      for (std::size_t c = 0; c < k; ++c) means.row(static_cast<Eigen::Index>(c)) /= counts[c];
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      Eigen::VectorXd centered(static_cast<Eigen::Index>(d));
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<Eigen::Index>(y_index[i]);
        for (std::size_t j = 0; j < d; ++j) {
          centered(static_cast<Eigen::Index>(j)) = x(i, j) - means(c, static_cast<Eigen::Index>(j));
        }
        cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
      }
      cov = cov.selfadjointView<Eigen::Lower>();
      const double dof = n > k ? static_cast<double>(n - k) : 1.0;
      cov /= dof;
      cov.diagonal().array() += spec.lda_ridge;
      const Eigen::LDLT<Eigen::MatrixXd> solver(cov);
      const Eigen::MatrixXd coef = solver.solve(means.transpose());  // d x k
      model.lda_coef_ = Matrix(k, d);
      model.lda_offset_.resize(k);
      for (std::size_t c = 0; c < k; ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        for (std::size_t j = 0; j < d; ++j) model.lda_coef_(c, j) = coef(static_cast<Eigen::Index>(j), ci);
        model.lda_offset_[c] = -0.5 * means.row(ci).dot(coef.col(ci)) + std::log(counts[c] / static_cast<double>(n));
      }
      break;
    }
  }
  return model;
}

std::vector<double> Model::predict_proba_row(std::span<const double> x) const {
  if (x.size() != n_features_) {
    fail(ErrorCode::Parameter, "expected " + std::to_string(n_features_) + " features, got " + std::to_string(x.size()));
  }
  const std::size_t k = classes_.size();
  if (degenerate_) return std::vector<double>(k, 1.0);
  std::vector<double> p(k, 0.0);
  switch (spec_.kind) {
    case ModelKind::Cart:
    case ModelKind::Forest: {
      for (const auto& tree : forest_->trees) {
        const auto leaf = tree.leaf_for(x);
        const double* dist = tree.distribution.data() + leaf * k;
        for (std::size_t c = 0; c < k; ++c) p[c] += dist[c];
      }
      const double inv = 1.0 / static_cast<double>(forest_->trees.size());
      for (auto& v : p) v *= inv;
      break;
    }
    case ModelKind::Knn: {
      const std::size_t n = train_x_.rows();
      std::vector<std::pair<double, std::size_t>> dist(n);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        const auto row = train_x_.row(i);
        for (std::size_t j = 0; j < x.size(); ++j) acc += (row[j] - x[j]) * (row[j] - x[j]);
        dist[i] = {acc, i};
      }
      const std::size_t kk = std::min(spec_.knn_k, n);
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
      for (std::size_t i = 0; i < kk; ++i) p[static_cast<std::size_t>(train_y_[dist[i].second])] += 1.0;
      for (auto& v : p) v /= static_cast<double>(kk);
      break;
    }
    case ModelKind::Lda: {
      std::vector<double> z(k);
      for (std::size_t c = 0; c < k; ++c) {
        const auto w = lda_coef_.row(c);
        z[c] = std::inner_product(w.begin(), w.end(), x.begin(), lda_offset_[c]);
      }
      p = softmax(std::move(z));
      break;
    }
  }
  return p;
}

Matrix Model::predict_proba(const Matrix& x) const {
  Matrix out(x.rows(), classes_.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto p = predict_proba_row(x.row(i));
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

std::vector<int> Model::predict(const Matrix& x) const {
  const auto proba = predict_proba(x);
  std::vector<int> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = proba.row(i);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    out[i] = classes_[static_cast<std::size_t>(best)];
  }
  return out;
}

std::string Model::to_json() const {
  json j;
  j["format"] = "biokey-model";
  j["version"] = kModelFormatVersion;
  j["kind"] = to_string(spec_.kind);
  j["spec"] = {{"n_trees", spec_.n_trees},
               {"min_samples_split", spec_.min_samples_split},
               {"bootstrap", spec_.bootstrap},
               {"feature_subsampling", spec_.feature_subsampling},
               {"knn_k", spec_.knn_k},
               {"lda_ridge", spec_.lda_ridge},
               {"seed", spec_.seed}};
  j["classes"] = classes_;
  j["n_features"] = n_features_;
  j["degenerate"] = degenerate_;
  if (forest_) {
    json trees = json::array();
    for (const auto& t : forest_->trees) trees.push_back(tree_to_json(t));
    j["forest"] = {{"n_classes", forest_->n_classes},
                   {"n_features", forest_->n_features},
                   {"feature_names", forest_->feature_names},
                   {"max_features", forest_->max_features},
                   {"trees", std::move(trees)}};
  }
  if (spec_.kind == ModelKind::Knn && !degenerate_) {
    j["knn"] = {{"x", matrix_to_json(train_x_)}, {"y", train_y_}};
  }
  if (spec_.kind == ModelKind::Lda && !degenerate_) {
    j["lda"] = {{"coef", matrix_to_json(lda_coef_)}, {"offset", lda_offset_}};
  }
  return j.dump();
}

Model Model::from_json(const std::string& text) {
  Model m;
  try {
    const auto j = json::parse(text);
    if (j.at("format") != "biokey-model" || j.at("version").get<int>() != kModelFormatVersion) {
      fail(ErrorCode::Format, "unsupported model file version");
    }
    m.spec_.kind = model_kind_from_string(j.at("kind").get<std::string>());
    const auto& s = j.at("spec");
    m.spec_.n_trees = s.at("n_trees").get<std::size_t>();
    m.spec_.min_samples_split = s.at("min_samples_split").get<std::size_t>();
    m.spec_.bootstrap = s.at("bootstrap").get<bool>();
    m.spec_.feature_subsampling = s.at("feature_subsampling").get<bool>();
    m.spec_.knn_k = s.at("knn_k").get<std::size_t>();
    m.spec_.lda_ridge = s.at("lda_ridge").get<double>();
    m.spec_.seed = s.at("seed").get<std::uint64_t>();
    m.classes_ = j.at("classes").get<std::vector<int>>();
    m.n_features_ = j.at("n_features").get<std::size_t>();
    m.degenerate_ = j.at("degenerate").get<bool>();
    if (j.contains("forest")) {
      const auto& f = j["forest"];
      ForestModel forest;
      forest.n_classes = f.at("n_classes").get<std::size_t>();
      forest.n_features = f.at("n_features").get<std::size_t>();
      forest.feature_names = f.at("feature_names").get<std::vector<std::string>>();
      forest.max_features = f.at("max_features").get<std::size_t>();
      forest.n_trees = m.spec_.kind == ModelKind::Cart ? 1 : m.spec_.n_trees;
      forest.min_samples_split = m.spec_.min_samples_split;
      forest.bootstrap = m.spec_.kind == ModelKind::Cart ? false : m.spec_.bootstrap;
      forest.seed = m.spec_.seed;
      for (const auto& t : f.at("trees")) forest.trees.push_back(tree_from_json(t));
      m.forest_ = std::move(forest);
    }
    if (j.contains("knn")) {
      m.train_x_ = matrix_from_json(j["knn"].at("x"));
      m.train_y_ = j["knn"].at("y").get<std::vector<int>>();
    }
    if (j.contains("lda")) {
      m.lda_coef_ = matrix_from_json(j["lda"].at("coef"));
      m.lda_offset_ = j["lda"].at("offset").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, std::string("model file: ") + e.what());
  }
  return m;
}

}  // namespace biokey::learn
