#include "biokey/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "biokey/error.hpp"
#include "biokey/random.hpp"

namespace biokey::augment {

std::string to_string(Method m) {
  switch (m) {
    case Method::None: return "none";
    case Method::Jitter: return "jitter";
    case Method::TimeWarp: return "timew";
    case Method::Smote: return "smote";
    case Method::Adasyn: return "adasyn";
  }
  return "none";
}

Method method_from_string(const std::string& name) {
  if (name == "none") return Method::None;
  if (name == "jitter") return Method::Jitter;
  if (name == "timew" || name == "timewarp") return Method::TimeWarp;
  if (name == "smote") return Method::Smote;
  if (name == "adasyn") return Method::Adasyn;
  fail(ErrorCode::Parameter, "unknown augmentation method: " + name);
}

namespace {

void check_sigma(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail(ErrorCode::Parameter, "sigma must be finite and >= 0");
}

}  // namespace

Matrix jitter(const Matrix& trial, double sigma, std::uint64_t seed) {
  check_sigma(sigma);
  Matrix out = trial;
  Rng rng(seed);
  const std::size_t n = trial.cols();
  for (std::size_t c = 0; c < trial.rows(); ++c) {
    const auto x = trial.row(c);
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    auto y = out.row(c);
    for (auto& v : y) v += sigma * sd * rng.normal();
  }
  return out;
}

WarpPlan plan_time_warp(double sigma, std::uint64_t seed) {
  check_sigma(sigma);
  Rng rng(seed);
  WarpPlan plan;
  plan.slices = 2 + static_cast<std::size_t>(rng.below(3));
  plan.slice = static_cast<std::size_t>(rng.below(plan.slices));
  if (sigma > 0.0) {
    double z;
    do {
      z = rng.normal();
    } while (std::abs(z) > 3.0);
    plan.factor = 1.0 + sigma * z;
  }
  return plan;
}

Matrix apply_time_warp(const Matrix& trial, const WarpPlan& plan) {
  if (plan.slices < 1 || plan.slice >= plan.slices) fail(ErrorCode::Parameter, "invalid warp slice");
  if (!(plan.factor > 0.0)) fail(ErrorCode::Parameter, "warp factor must be positive");
  const std::size_t n = trial.cols();
  if (plan.factor == 1.0 || n < 2) return trial;

  const double span = static_cast<double>(n - 1);
  std::vector<double> b(plan.slices + 1);
  for (std::size_t i = 0; i <= plan.slices; ++i) b[i] = span * static_cast<double>(i) / static_cast<double>(plan.slices);
  const double stretch = (plan.factor - 1.0) * (b[plan.slice + 1] - b[plan.slice]);
  std::vector<double> w(b);
  for (std::size_t i = plan.slice + 1; i <= plan.slices; ++i) w[i] += stretch;

  // Source position for each output sample on the uniformly resampled warped axis.
  std::vector<double> pos(n);
  std::size_t s = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double u = w.back() * static_cast<double>(j) / span;
    while (s + 1 < plan.slices && u > w[s + 1]) ++s;
    double p = b[s] + (u - w[s]) * (b[s + 1] - b[s]) / (w[s + 1] - w[s]);
    pos[j] = std::clamp(p, 0.0, span);
  }
  pos.front() = 0.0;
  pos.back() = span;

  Matrix out(trial.rows(), n);
  for (std::size_t c = 0; c < trial.rows(); ++c) {
    const auto x = trial.row(c);
    auto y = out.row(c);
    for (std::size_t j = 0; j < n; ++j) {
      const auto i0 = std::min(static_cast<std::size_t>(pos[j]), n - 2);
      const double f = pos[j] - static_cast<double>(i0);
      y[j] = f == 0.0 ? x[i0] : (f == 1.0 ? x[i0 + 1] : x[i0] + f * (x[i0 + 1] - x[i0]));
    }
  }
  return out;
}

Matrix time_warp(const Matrix& trial, double sigma, std::uint64_t seed) {
  return apply_time_warp(trial, plan_time_warp(sigma, seed));
}

std::vector<std::size_t> largest_remainder(const std::vector<double>& weights, std::size_t total) {
  if (weights.empty()) fail(ErrorCode::Parameter, "no weights to allocate over");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::Parameter, "weights must be finite and >= 0");
    sum += w;
  }
  std::vector<double> share(weights.size());
  if (sum > 0.0) {
    for (std::size_t i = 0; i < weights.size(); ++i) share[i] = weights[i] / sum * static_cast<double>(total);
  } else {
    std::fill(share.begin(), share.end(), static_cast<double>(total) / static_cast<double>(weights.size()));
  }
  std::vector<std::size_t> out(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < share.size(); ++i) {
    out[i] = static_cast<std::size_t>(std::floor(share[i]));
    assigned += out[i];
  }
  // Rounding in the shares can push the floor sum past the total.
  while (assigned > total) {
    auto it = std::max_element(out.begin(), out.end());
    --*it;
    --assigned;
  }
  std::vector<std::size_t> order(share.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return share[a] - std::floor(share[a]) > share[b] - std::floor(share[b]);
  });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
    ++out[order[i]];
    ++assigned;
  }
  return out;
}

std::vector<std::size_t> nearest(const Matrix& x, std::size_t query, const std::vector<std::size_t>& candidates,
                                 std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(candidates.size());
  const auto q = x.row(query);
  for (auto c : candidates) {
    if (c == query) continue;
    const auto r = x.row(c);
    double d = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) d += (q[j] - r[j]) * (q[j] - r[j]);
    dist.emplace_back(d, c);
  }
  k = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

namespace {

struct Setup {
  std::vector<std::size_t> minority_rows;
  std::vector<std::vector<std::size_t>> minority_neighbors;
  std::size_t k = 0;
  std::size_t to_generate = 0;
};

Setup prepare(const Matrix& x, const std::vector<int>& labels, int minority, std::size_t target_count, std::size_t k) {
  if (labels.size() != x.rows()) fail(ErrorCode::Parameter, "labels do not match rows");
  if (k == 0) fail(ErrorCode::Parameter, "k must be positive");
  Setup s;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == minority) s.minority_rows.push_back(i);
  const std::size_t m = s.minority_rows.size();
  if (m < 2) fail(ErrorCode::InsufficientData, "oversampling needs at least two minority samples");
  s.k = std::min(k, m - 1);
  s.to_generate = target_count > m ? target_count - m : 0;
  for (auto r : s.minority_rows) s.minority_neighbors.push_back(nearest(x, r, s.minority_rows, s.k));
  return s;
}

void emit(Oversampled& out, const Matrix& x, int minority, std::size_t base, std::size_t neighbor, double u) {
  const auto a = x.row(base);
  const auto b = x.row(neighbor);
  std::vector<double> row(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) row[j] = a[j] + u * (b[j] - a[j]);
  out.x.append_row(row);
  out.labels.push_back(minority);
  out.origins.push_back({base, neighbor, u});
}

}  // namespace

Oversampled smote(const Matrix& x, const std::vector<int>& labels, int minority, std::size_t target_count,
                  std::size_t k, std::uint64_t seed) {
  const auto s = prepare(x, labels, minority, target_count, k);
  Oversampled out{x, labels, {}, {}, s.k, false};
  Rng rng(seed);
  const std::size_t m = s.minority_rows.size();
  for (std::size_t g = 0; g < s.to_generate; ++g) {
    const auto i = static_cast<std::size_t>(rng.below(m));
    const auto& nn = s.minority_neighbors[i];
    const auto neighbor = nn[static_cast<std::size_t>(rng.below(nn.size()))];
    emit(out, x, minority, s.minority_rows[i], neighbor, rng.uniform());
  }
  return out;
}

Oversampled adasyn(const Matrix& x, const std::vector<int>& labels, int minority, std::size_t target_count,
                   std::size_t k, std::uint64_t seed) {
  const auto s = prepare(x, labels, minority, target_count, k);
  Oversampled out{x, labels, {}, {}, s.k, false};
  std::vector<std::size_t> all(x.rows());
  std::iota(all.begin(), all.end(), 0);
  const std::size_t k_all = std::min(k, x.rows() - 1);

  std::vector<double> hardness;
  for (auto r : s.minority_rows) {
    const auto nn = nearest(x, r, all, k_all);
    std::size_t majority = 0;
    for (auto j : nn) majority += labels[j] != minority;
    hardness.push_back(static_cast<double>(majority) / static_cast<double>(k_all));
  }
  out.uniform_fallback = std::all_of(hardness.begin(), hardness.end(), [](double h) { return h == 0.0; });
  out.allocation = largest_remainder(hardness, s.to_generate);

  Rng rng(seed);
  for (std::size_t i = 0; i < s.minority_rows.size(); ++i) {
    const auto& nn = s.minority_neighbors[i];
    for (std::size_t g = 0; g < out.allocation[i]; ++g) {
      const auto neighbor = nn[static_cast<std::size_t>(rng.below(nn.size()))];
      emit(out, x, minority, s.minority_rows[i], neighbor, rng.uniform());
    }
  }
  return out;
}

}  // namespace biokey::augment
