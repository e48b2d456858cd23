#include "biokey/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>

#include "biokey/error.hpp"
#include "biokey/fft.hpp"
#include "biokey/wavelet.hpp"

namespace biokey {

void FeatureVector::append(const FeatureVector& other, const std::string& prefix) {
  for (const auto& n : other.names) names.push_back(prefix + n);
  values.insert(values.end(), other.values.begin(), other.values.end());
  degenerate = degenerate || other.degenerate;
}

double FeatureVector::at(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail(ErrorCode::Parameter, "no feature named '" + name + "'");
  return values[static_cast<std::size_t>(it - names.begin())];
}

namespace features {

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // n-1 denominator
};

Moments moments(std::span<const double> x) {
  Moments m;
  const auto n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.var = x.size() > 1 ? ss / (n - 1.0) : 0.0;
  return m;
}

std::vector<double> diff(std::span<const double> x) {
  std::vector<double> d(x.size() > 0 ? x.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

// Single-sided power per bin (sums to the mean square of x) and single-sided
// amplitude spectrum.
struct Spectrum {
  std::vector<double> freq;
  std::vector<double> power;
  std::vector<double> amplitude;
};

Spectrum spectrum(std::span<const double> x, double fs) {
  const auto bins = fft::real_forward(x);
  const std::size_t n = x.size();
  const auto nd = static_cast<double>(n);
  Spectrum s;
  s.freq.resize(bins.size());
  s.power.resize(bins.size());
  s.amplitude.resize(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    const double mag = std::abs(bins[k]);
    s.freq[k] = static_cast<double>(k) * fs / nd;
    s.power[k] = (edge ? 1.0 : 2.0) * mag * mag / (nd * nd);
    s.amplitude[k] = (edge ? 1.0 : 2.0) * mag / nd;
  }
  return s;
}

double band_sum(const Spectrum& s, double lo, double hi) {
  double acc = 0.0;
  for (std::size_t k = 0; k < s.freq.size(); ++k) {
    if (s.freq[k] >= lo && s.freq[k] < hi) acc += s.power[k];
  }
  return acc;
}

const std::vector<std::string>& time_names() {
  static const std::vector<std::string> names = {
      "mean", "median",   "std",      "mad",             "p25",             "p75",
      "iqr",  "skewness", "kurtosis", "hjorth_activity", "hjorth_mobility", "hjorth_complexity",
      "shannon_entropy"};
  return names;
}

const std::vector<std::string>& spectral_names() {
  static const std::vector<std::string> names = {"spectral_entropy", "m2f_hz",   "m2f_amp",  "m2f_rel_energy",
                                                  "bp_delta",         "bp_theta", "bp_alpha", "bp_beta",
                                                  "bp_gamma",         "bp_raw"};
  return names;
}

struct BandEdge {
  double lo;
  double hi;
};
constexpr BandEdge kDelta{0.0, 4.0};
constexpr BandEdge kTheta{4.0, 7.0};
constexpr BandEdge kAlpha{7.0, 13.0};
constexpr BandEdge kBeta{13.0, 30.0};
constexpr BandEdge kGamma{30.0, 63.0};
constexpr BandEdge kRaw{0.0, 63.0};

}  // namespace

double percentile(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) fail(ErrorCode::InsufficientData, "percentile of an empty sample");
  const double r = p / 100.0 * static_cast<double>(n);
  const double r_floor = std::floor(r);
  if (r == r_floor) {
    const auto idx = static_cast<std::size_t>(r);  // 1-based rank r -> index r-1
    if (idx == 0) return sorted.front();
    if (idx >= n) return sorted.back();
    return 0.5 * (sorted[idx - 1] + sorted[idx]);
  }
  const auto idx = static_cast<std::size_t>(std::ceil(r));
  return sorted[std::min(idx, n) - 1];
}

FeatureVector time_features(std::span<const double> x) {
  if (x.size() < 2) fail(ErrorCode::InsufficientData, "time features need at least 2 samples");
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorCode::Validation, "non-finite sample");
  }
  FeatureVector fv;
  fv.names = time_names();
  const auto n = static_cast<double>(x.size());
  const auto m = moments(x);
  const double s = std::sqrt(m.var);

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double median = percentile(sorted, 50.0);
  const double p25 = percentile(sorted, 25.0);
  const double p75 = percentile(sorted, 75.0);

  double abs_dev = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    abs_dev += std::abs(d);
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const double mad = abs_dev / n;

  double skewness = 0.0;
  double kurtosis = 0.0;
  if (m.var > 0.0) {
    skewness = (m3 / n) / (s * s * s);
    kurtosis = (m4 / n) / (m.var * m.var) - 3.0;
  } else {
    fv.degenerate = true;
  }

  const auto dx = diff(x);
  const auto ddx = diff(dx);
  const double var_dx = moments(dx).var;
  const double var_ddx = ddx.size() >= 2 ? moments(ddx).var : 0.0;
  double mobility = 0.0;
  double complexity = 0.0;
  if (m.var > 0.0) {
    mobility = std::sqrt(var_dx / m.var);
    if (var_dx > 0.0) {
      complexity = std::sqrt(var_ddx / var_dx) / mobility;
    } else {
      fv.degenerate = true;
    }
  } else {
    fv.degenerate = true;
  }

  double entropy = 0.0;
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (hi > lo) {
    std::vector<std::size_t> counts(kEntropyBins, 0);
    const double width = (hi - lo) / static_cast<double>(kEntropyBins);
    for (double v : x) {
      auto bin = static_cast<std::size_t>((v - lo) / width);
      counts[std::min(bin, kEntropyBins - 1)]++;
    }
    for (auto c : counts) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / n;
      entropy -= p * std::log2(p);
    }
  }

  fv.values = {m.mean, median, s, mad, p25, p75, p75 - p25, skewness, kurtosis, m.var, mobility, complexity, entropy};
  return fv;
}

FeatureVector spectral_features(std::span<const double> x, double fs) {
  if (x.size() < 64) fail(ErrorCode::InsufficientData, "spectral features need at least 64 samples");
  FeatureVector fv;
  fv.names = spectral_names();
  const auto s = spectrum(x, fs);
  const std::size_t bins = s.power.size();

  const double total = std::accumulate(s.power.begin(), s.power.end(), 0.0);
  double entropy = 0.0;
  if (total > 0.0) {
    for (double p : s.power) {
      const double q = p / total;
      if (q > 0.0) entropy -= q * std::log2(q);
    }
    entropy /= std::log2(static_cast<double>(bins));
  } else {
    fv.degenerate = true;
  }

  // Second-largest strict local maximum of the amplitude spectrum; ties to the lower frequency.
  std::vector<std::size_t> peaks;
  for (std::size_t k = 1; k + 1 < bins; ++k) {
    if (s.amplitude[k] > s.amplitude[k - 1] && s.amplitude[k] > s.amplitude[k + 1]) peaks.push_back(k);
  }
  if (peaks.size() < 2) {
    peaks.resize(bins);
    std::iota(peaks.begin(), peaks.end(), 0);
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](std::size_t a, std::size_t b) { return s.amplitude[a] > s.amplitude[b]; });
  const std::size_t m2f = peaks[1];
  const double m2f_hz = s.freq[m2f];

  double window = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    if (s.freq[k] >= m2f_hz - kM2fHalfWidthHz && s.freq[k] <= m2f_hz + kM2fHalfWidthHz) window += s.power[k];
  }
  const double below_cutoff = band_sum(s, 0.0, kSpectrumCutoffHz);
  double rel_energy = 0.0;
  if (below_cutoff > 0.0) {
    rel_energy = window / below_cutoff;
  } else {
    fv.degenerate = true;
  }

  fv.values = {entropy,
               m2f_hz,
               s.amplitude[m2f],
               rel_energy,
               band_sum(s, kDelta.lo, kDelta.hi),
               band_sum(s, kTheta.lo, kTheta.hi),
               band_sum(s, kAlpha.lo, kAlpha.hi),
               band_sum(s, kBeta.lo, kBeta.hi),
               band_sum(s, kGamma.lo, kGamma.hi),
               band_sum(s, kRaw.lo, kRaw.hi)};
  return fv;
}

std::size_t wavelet_feature_count(WaveletScheme scheme) { return scheme == WaveletScheme::Wpt18 ? 18 : 7; }

FeatureVector wavelet_features(std::span<const double> x, WaveletScheme scheme) {
  if (x.size() != kTrialLength) {
    fail(ErrorCode::Parameter, "wavelet features need exactly " + std::to_string(kTrialLength) + " samples");
  }
  const auto bands = scheme == WaveletScheme::Wpt18 ? wavelet::packet_bands18(x, kSampleRateHz)
                                                    : wavelet::dwt_bands(x, kSampleRateHz, 6);
  FeatureVector fv;
  const auto n = static_cast<double>(x.size());
  for (const auto& b : bands) {
    double energy = 0.0;
    for (double c : b.coefficients) energy += c * c;
    fv.names.push_back(b.name);
    // Normalized by signal length so band powers add up to the mean square.
    fv.values.push_back(energy / n);
  }
  return fv;
}

double smat(const Matrix& trial) {
  if (trial.cols() == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t c = 0; c < trial.rows(); ++c)
    for (double v : trial.row(c)) acc += std::abs(v);
  return acc / static_cast<double>(trial.cols());
}

std::string channel_label(std::size_t channel) {
  std::string s(kChannelNames.at(channel));
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  return s;
}

FeatureVector eeg_feature_vector(const TrialSample& trial, WaveletScheme scheme) {
  if (trial.eeg.rows() != kChannelCount || trial.eeg.cols() != kTrialLength) {
    fail(ErrorCode::Parameter, "trial EEG must be 5 x 1024");
  }
  FeatureVector fv;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto x = trial.eeg.row(c);
    const auto prefix = channel_label(c) + "_";
    fv.append(time_features(x), prefix);
    fv.append(spectral_features(x, kSampleRateHz), prefix);
    fv.append(wavelet_features(x, scheme), prefix);
  }
  fv.names.push_back("SMAT");
  fv.values.push_back(smat(trial.eeg));
  return fv;
}

std::vector<std::string> eeg_feature_names(WaveletScheme scheme) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto prefix = channel_label(c) + "_";
    for (const auto& n : time_names()) names.push_back(prefix + n);
    for (const auto& n : spectral_names()) names.push_back(prefix + n);
    if (scheme == WaveletScheme::Wpt18) {
      for (int i = 1; i <= 18; ++i) names.push_back(prefix + "W" + std::to_string(i));
    } else {
      names.push_back(prefix + "cA6");
      for (int i = 6; i >= 1; --i) names.push_back(prefix + "cD" + std::to_string(i));
    }
  }
  names.push_back("SMAT");
  return names;
}

std::vector<KeyPress> pair_key_events(const std::vector<KeyEvent>& events) {
  std::vector<KeyEvent> sorted = events;
  std::stable_sort(sorted.begin(), sorted.end(), [](const KeyEvent& a, const KeyEvent& b) { return a.t_ms < b.t_ms; });
  std::vector<KeyPress> presses;
  std::map<std::string, std::size_t> pending;
  for (const auto& e : sorted) {
    if (e.action == KeyAction::Down) {
      if (pending.count(e.key)) fail(ErrorCode::Integrity, "key '" + e.key + "' pressed again before release");
      pending[e.key] = presses.size();
      presses.push_back({e.key, e.t_ms, e.t_ms});
    } else {
      const auto it = pending.find(e.key);
      if (it == pending.end()) fail(ErrorCode::Integrity, "key '" + e.key + "' released without prior press");
      presses[it->second].up_ms = e.t_ms;
      pending.erase(it);
    }
  }
  if (!pending.empty()) fail(ErrorCode::Integrity, "key '" + pending.begin()->first + "' never released");
  return presses;
}

std::vector<std::string> keystroke_feature_names() {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= kPasswordLength; ++i) names.push_back("hold_" + std::to_string(i));
  for (const char* kind : {"downdown_", "upup_", "updown_"}) {
    for (std::size_t i = 1; i < kPasswordLength; ++i) names.push_back(kind + std::to_string(i));
  }
  return names;
}

FeatureVector keystroke_features(const std::vector<KeyEvent>& events) {
  const auto presses = pair_key_events(events);
  if (presses.size() != kPasswordLength) {
    fail(ErrorCode::Integrity, "expected 12 keypresses, got " + std::to_string(presses.size()));
  }
  FeatureVector fv;
  fv.names = keystroke_feature_names();
  fv.values.reserve(kKeystrokeFeatureCount);
  for (const auto& p : presses) fv.values.push_back(p.up_ms - p.down_ms);
  for (std::size_t i = 0; i + 1 < presses.size(); ++i) fv.values.push_back(presses[i + 1].down_ms - presses[i].down_ms);
  for (std::size_t i = 0; i + 1 < presses.size(); ++i) fv.values.push_back(presses[i + 1].up_ms - presses[i].up_ms);
  for (std::size_t i = 0; i + 1 < presses.size(); ++i) fv.values.push_back(presses[i + 1].down_ms - presses[i].up_ms);
  return fv;
}

NormStats compute_norm_stats(const Matrix& rows) {
  NormStats stats;
  stats.min.assign(rows.cols(), 0.0);
  stats.max.assign(rows.cols(), 0.0);
  for (std::size_t j = 0; j < rows.cols(); ++j) {
    if (rows.rows() == 0) continue;
    double lo = rows(0, j);
    double hi = lo;
    for (std::size_t i = 1; i < rows.rows(); ++i) {
      lo = std::min(lo, rows(i, j));
      hi = std::max(hi, rows(i, j));
    }
    stats.min[j] = lo;
    stats.max[j] = hi;
  }
  return stats;
}

void apply_norm_stats(Matrix& rows, const NormStats& stats) {
  if (stats.min.size() != rows.cols() || stats.max.size() != rows.cols()) {
    fail(ErrorCode::Parameter, "normalization statistics do not match feature width");
  }
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (std::size_t j = 0; j < rows.cols(); ++j) {
      const double lo = stats.min[j];
      const double hi = stats.max[j];
      double& v = rows(i, j);
      if (!(hi > lo)) {
        v = 0.5;
      } else {
        v = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
      }
    }
  }
}

std::pair<FeatureMatrix, NormStats> minmax_normalize(const FeatureMatrix& m, const std::optional<NormStats>& stats) {
  NormStats s = stats ? *stats : compute_norm_stats(m.rows);
  FeatureMatrix out = m;
  apply_norm_stats(out.rows, s);
  out.norm_stats = s;
  return {std::move(out), std::move(s)};
}

}  // namespace features
}  // namespace biokey
