#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

bool close_rel(double a, double b, double rel) {
  if (a == b) return true;
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

double mean(std::span<const double> x) {
  long double s = 0.0L;
  for (double v : x) s += v;
  return static_cast<double>(s / static_cast<long double>(x.size()));
}

double variance(std::span<const double> x) {
  long double s = 0.0L;
  for (double v : x) s += v;
  const long double mu = s / static_cast<long double>(x.size());
  long double ss = 0.0L;
  for (double v : x) ss += (v - mu) * (v - mu);
  return static_cast<double>(ss / static_cast<long double>(x.size() - 1));
}

std::vector<double> first_difference(std::span<const double> x) {
  std::vector<double> d;
  for (std::size_t i = 1; i < x.size(); ++i) d.push_back(x[i] - x[i - 1]);
  return d;
}

double percentile(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  const double r = p / 100.0 * n;
  // 1-based element access.
  auto at = [&](double rank) { return x[static_cast<std::size_t>(rank) - 1]; };
  if (std::floor(r) == r) {
    if (r < 1.0) return x.front();
    if (r >= n) return x.back();
    return (at(r) + at(r + 1.0)) / 2.0;
  }
  return at(std::ceil(r));
}

std::map<std::string, double> time_features(std::span<const double> x) {
  std::map<std::string, double> f;
  const long double n = static_cast<long double>(x.size());
  const double mu = mean(x);
  const double var = variance(x);
  const double s = std::sqrt(var);
  long double abs_sum = 0.0L, m3 = 0.0L, m4 = 0.0L;
  for (double v : x) {
    const long double d = v - static_cast<long double>(mu);
    abs_sum += std::fabs(d);
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  f["mean"] = mu;
  f["median"] = percentile({x.begin(), x.end()}, 50.0);
  f["std"] = s;
  f["mad"] = static_cast<double>(abs_sum / n);
  f["p25"] = percentile({x.begin(), x.end()}, 25.0);
  f["p75"] = percentile({x.begin(), x.end()}, 75.0);
  f["iqr"] = f["p75"] - f["p25"];
  f["skewness"] = var > 0 ? static_cast<double>((m3 / n) / (static_cast<long double>(s) * s * s)) : 0.0;
  f["kurtosis"] = var > 0 ? static_cast<double>((m4 / n) / (static_cast<long double>(s) * s * s * s)) - 3.0 : 0.0;
  f["hjorth_activity"] = var;

  const auto dx = first_difference(x);
  const auto ddx = first_difference(dx);
  const double mob = var > 0 ? std::sqrt(variance(dx) / var) : 0.0;
  const double mob_dx = variance(dx) > 0 ? std::sqrt(variance(ddx) / variance(dx)) : 0.0;
  f["hjorth_mobility"] = mob;
  f["hjorth_complexity"] = mob > 0 ? mob_dx / mob : 0.0;

  // 64 equal-width bins over [min, max]; the maximum falls in the last bin.
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  double h = 0.0;
  if (hi > lo) {
    const double width = (hi - lo) / 64.0;
    std::vector<int> counts(64, 0);
    for (double v : x) {
      auto b = static_cast<std::size_t>(std::floor((v - lo) / width));
      counts[std::min<std::size_t>(b, 63)]++;
    }
    for (int c : counts) {
      if (c == 0) continue;
      const double p = c / static_cast<double>(x.size());
      h -= p * std::log2(p);
    }
  }
  f["shannon_entropy"] = h;
  return f;
}

Periodogram periodogram(std::span<const double> x, double fs) {
  const std::size_t n = x.size();
  std::vector<long double> c(n), s(n);
  for (std::size_t j = 0; j < n; ++j) {
    const long double a = 2.0L * std::numbers::pi_v<long double> * static_cast<long double>(j) / n;
    c[j] = std::cos(a);
    s[j] = std::sin(a);
  }
  Periodogram p;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    long double re = 0.0L, im = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t j = (k * t) % n;
      re += x[t] * c[j];
      im -= x[t] * s[j];
    }
    const long double mag2 = re * re + im * im;
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    const long double scale = edge ? 1.0L : 2.0L;
    p.freq.push_back(static_cast<double>(k) * fs / static_cast<double>(n));
    p.power.push_back(static_cast<double>(scale * mag2 / (static_cast<long double>(n) * n)));
    p.amplitude.push_back(static_cast<double>(scale * std::sqrt(mag2) / n));
  }
  return p;
}

std::map<std::string, double> spectral_features(std::span<const double> x, double fs) {
  const auto p = periodogram(x, fs);
  const std::size_t bins = p.power.size();
  auto band = [&](double lo, double hi) {
    long double acc = 0.0L;
    for (std::size_t k = 0; k < bins; ++k)
      if (p.freq[k] >= lo && p.freq[k] < hi) acc += p.power[k];
    return static_cast<double>(acc);
  };
  std::map<std::string, double> f;
  long double total = 0.0L;
  for (double v : p.power) total += v;
  long double h = 0.0L;
  for (double v : p.power) {
    const long double q = v / total;
    if (q > 0) h -= q * std::log2(q);
  }
  f["spectral_entropy"] = total > 0 ? static_cast<double>(h / std::log2(static_cast<long double>(bins))) : 0.0;

  std::vector<std::size_t> peaks;
  for (std::size_t k = 1; k + 1 < bins; ++k)
    if (p.amplitude[k] > p.amplitude[k - 1] && p.amplitude[k] > p.amplitude[k + 1]) peaks.push_back(k);
  if (peaks.size() < 2) {
    peaks.clear();
    for (std::size_t k = 0; k < bins; ++k) peaks.push_back(k);
  }
  // Selection of the second largest by two scans; ties keep the lower frequency.
  std::size_t first = peaks[0];
  for (auto k : peaks)
    if (p.amplitude[k] > p.amplitude[first]) first = k;
  std::size_t second = bins;
  for (auto k : peaks) {
    if (k == first) continue;
    if (second == bins || p.amplitude[k] > p.amplitude[second]) second = k;
  }
  f["m2f_hz"] = p.freq[second];
  f["m2f_amp"] = p.amplitude[second];
  long double window = 0.0L;
  for (std::size_t k = 0; k < bins; ++k)
    if (std::abs(p.freq[k] - p.freq[second]) <= 5.0) window += p.power[k];
  const double below = band(0.0, 63.0);
  f["m2f_rel_energy"] = below > 0 ? static_cast<double>(window / below) : 0.0;
  f["bp_delta"] = band(0.0, 4.0);
  f["bp_theta"] = band(4.0, 7.0);
  f["bp_alpha"] = band(7.0, 13.0);
  f["bp_beta"] = band(13.0, 30.0);
  f["bp_gamma"] = band(30.0, 63.0);
  f["bp_raw"] = band(0.0, 63.0);
  return f;
}

std::vector<double> baseline_residual(std::span<const double> x, int degree) {
  const std::size_t n = x.size();
  const std::size_t m = static_cast<std::size_t>(degree) + 1;
  std::vector<long double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = -1.0L + 2.0L * i / static_cast<long double>(n - 1);
  std::vector<std::vector<long double>> a(m, std::vector<long double>(m + 1, 0.0L));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<long double> pw(2 * m, 1.0L);
    for (std::size_t j = 1; j < 2 * m; ++j) pw[j] = pw[j - 1] * t[i];
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) a[r][c] += pw[r + c];
      a[r][m] += pw[r] * x[i];
    }
  }
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const long double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= m; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    long double fit = 0.0L, pw = 1.0L;
    for (std::size_t j = 0; j < m; ++j) {
      fit += a[j][m] / a[j][j] * pw;
      pw *= t[i];
    }
    out[i] = static_cast<double>(x[i] - fit);
  }
  return out;
}

double gini(std::span<const std::uint32_t> counts) {
  double total = 0.0;
  for (auto c : counts) total += c;
  if (total == 0.0) return 0.0;
  double g = 0.0;
  for (auto c : counts) g += (c / total) * (1.0 - c / total);
  return g;
}

std::vector<double> impurity_decrease(const biokey::learn::ForestModel& forest) {
  std::vector<double> imp(forest.n_features, 0.0);
  for (const auto& tree : forest.trees) {
    const std::size_t k = tree.n_classes;
    auto counts = [&](std::size_t node) { return std::span<const std::uint32_t>(&tree.counts[node * k], k); };
    auto size = [&](std::size_t node) {
      double s = 0.0;
      for (auto c : counts(node)) s += c;
      return s;
    };
    std::vector<double> per_tree(forest.n_features, 0.0);
    for (std::size_t m = 0; m < tree.feature.size(); ++m) {
      if (tree.feature[m] < 0) continue;
      const auto l = static_cast<std::size_t>(tree.left[m]);
      const auto r = static_cast<std::size_t>(tree.right[m]);
      const double delta = gini(counts(m)) - (size(l) / size(m)) * gini(counts(l)) - (size(r) / size(m)) * gini(counts(r));
      per_tree[static_cast<std::size_t>(tree.feature[m])] += (size(m) / size(0)) * delta;
    }
    for (std::size_t f = 0; f < imp.size(); ++f) imp[f] += per_tree[f];
  }
  for (auto& v : imp) v /= static_cast<double>(forest.trees.size());
  return imp;
}

std::vector<std::uint32_t> routed_counts(const biokey::learn::Tree& tree, const biokey::Matrix& x,
                                         std::span<const int> y, std::span<const std::size_t> rows) {
  std::vector<std::uint32_t> counts(tree.feature.size() * tree.n_classes, 0);
  for (auto r : rows) {
    std::size_t node = 0;
    while (true) {
      counts[node * tree.n_classes + static_cast<std::size_t>(y[r])]++;
      if (tree.feature[node] < 0) break;
      const double v = x(r, static_cast<std::size_t>(tree.feature[node]));
      node = static_cast<std::size_t>(v <= tree.threshold[node] ? tree.left[node] : tree.right[node]);
    }
  }
  return counts;
}

std::vector<CartNode> cart(const biokey::Matrix& x, std::span<const int> y, std::size_t n_classes,
                           std::vector<std::size_t> samples, std::size_t min_samples_split) {
  std::vector<CartNode> nodes;
  std::function<int(const std::vector<std::size_t>&)> build = [&](const std::vector<std::size_t>& s) {
    CartNode node;
    node.counts.assign(n_classes, 0);
    for (auto i : s) node.counts[static_cast<std::size_t>(y[i])]++;
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(node);
    const auto nonzero = std::count_if(node.counts.begin(), node.counts.end(), [](auto c) { return c > 0; });
    if (s.size() < std::max<std::size_t>(min_samples_split, 2) || nonzero <= 1) return id;

    double best = -1.0;
    int best_f = -1;
    double best_t = 0.0;
    for (std::size_t f = 0; f < x.cols(); ++f) {
      std::vector<double> values;
      for (auto i : s) values.push_back(x(i, f));
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t v = 0; v + 1 < values.size(); ++v) {
        double t = 0.5 * (values[v] + values[v + 1]);
        if (t >= values[v + 1]) t = values[v];
        std::vector<double> l(n_classes, 0.0), r(n_classes, 0.0);
        double nl = 0.0, nr = 0.0;
        for (auto i : s) {
          if (x(i, f) <= t) {
            l[static_cast<std::size_t>(y[i])] += 1.0;
            nl += 1.0;
          } else {
            r[static_cast<std::size_t>(y[i])] += 1.0;
            nr += 1.0;
          }
        }
        double sl = 0.0, sr = 0.0;
        for (double c : l) sl += c * c;
        for (double c : r) sr += c * c;
        // Larger is better; equals n - n * (weighted child Gini).
        const double score = sl / nl + sr / nr;
        if (score > best) {
          best = score;
          best_f = static_cast<int>(f);
          best_t = t;
        }
      }
    }
    if (best_f < 0) return id;
    std::vector<std::size_t> ls, rs;
    for (auto i : s) (x(i, static_cast<std::size_t>(best_f)) <= best_t ? ls : rs).push_back(i);
    nodes[static_cast<std::size_t>(id)].feature = best_f;
    nodes[static_cast<std::size_t>(id)].threshold = best_t;
    const int l = build(ls);
    const int r = build(rs);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  };
  build(samples);
  return nodes;
}

bool same_tree(const biokey::learn::Tree& tree, const std::vector<CartNode>& ref) {
  std::function<bool(std::size_t, std::size_t)> eq = [&](std::size_t a, std::size_t b) {
    const auto& r = ref[b];
    for (std::size_t c = 0; c < tree.n_classes; ++c)
      if (tree.counts[a * tree.n_classes + c] != r.counts[c]) return false;
    if (tree.feature[a] != r.feature) return false;
    if (r.feature < 0) return true;
    if (tree.threshold[a] != r.threshold) return false;
    return eq(static_cast<std::size_t>(tree.left[a]), static_cast<std::size_t>(r.left)) &&
           eq(static_cast<std::size_t>(tree.right[a]), static_cast<std::size_t>(r.right));
  };
  return !ref.empty() && !tree.feature.empty() && eq(0, 0);
}

double abs_pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a), mb = mean(b);
  long double sab = 0.0L, saa = 0.0L, sbb = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return static_cast<double>(std::fabs(sab) / std::sqrt(saa * sbb));
}

bool on_segment(std::span<const double> p, std::span<const double> a, std::span<const double> b, double tol) {
  double dd = 0.0, pd = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    dd += (b[i] - a[i]) * (b[i] - a[i]);
    pd += (p[i] - a[i]) * (b[i] - a[i]);
  }
  const double u = dd > 0 ? pd / dd : 0.0;
  if (u < -tol || u > 1.0 + tol) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (std::abs(p[i] - (a[i] + u * (b[i] - a[i]))) > tol) return false;
  return true;
}

}  // namespace oracle
