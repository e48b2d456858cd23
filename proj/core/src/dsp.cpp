#include "biokey/dsp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "biokey/error.hpp"

namespace biokey::dsp {

namespace {

// Discrete orthonormal polynomial basis on the grid t_i = -1 + 2i/(n-1):
// Legendre polynomials re-orthonormalized on the samples with two passes
// of modified Gram-Schmidt.
std::vector<std::vector<double>> polynomial_basis(std::size_t n, int degree) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);

  std::vector<std::vector<double>> basis(static_cast<std::size_t>(degree) + 1, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double p_prev = 1.0;
    double p = t[i];
    basis[0][i] = 1.0;
    if (degree >= 1) basis[1][i] = p;
    for (int k = 2; k <= degree; ++k) {
      const double next = ((2.0 * k - 1.0) * t[i] * p - (k - 1.0) * p_prev) / k;
      p_prev = p;
      p = next;
      basis[static_cast<std::size_t>(k)][i] = p;
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t k = 0; k < basis.size(); ++k) {
      for (std::size_t j = 0; j < k; ++j) {
        const double dot = std::inner_product(basis[k].begin(), basis[k].end(), basis[j].begin(), 0.0);
        for (std::size_t i = 0; i < n; ++i) basis[k][i] -= dot * basis[j][i];
      }
      const double norm = std::sqrt(std::inner_product(basis[k].begin(), basis[k].end(), basis[k].begin(), 0.0));
      for (auto& v : basis[k]) v /= norm;
    }
  }
  return basis;
}

void check_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorCode::Validation, "signal contains non-finite samples");
  }
}

// Steady-state section states for a unit step, per transposed direct form II.
std::vector<std::array<double, 2>> step_initial_state(std::span<const Biquad> sections) {
  std::vector<std::array<double, 2>> zi(sections.size());
  double input_level = 1.0;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const auto& q = sections[s];
    const double dc_gain = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double y = dc_gain;
    zi[s] = {input_level * (y - q.b0), input_level * (q.b2 - q.a2 * y)};
    input_level *= dc_gain;
  }
  return zi;
}

std::vector<double> run_sections(std::span<const Biquad> sections, std::span<const double> x,
                                 std::vector<std::array<double, 2>> state) {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const auto& q = sections[s];
    double z1 = state[s][0];
    double z2 = state[s][1];
    for (auto& v : y) {
      const double in = v;
      const double out = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * out + z2;
      z2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
  return y;
}

}  // namespace

std::vector<double> correct_baseline(std::span<const double> signal, int degree) {
  if (signal.size() < static_cast<std::size_t>(degree) + 2) {
    fail(ErrorCode::InsufficientData, "baseline fit needs at least " + std::to_string(degree + 2) + " samples");
  }
  const auto basis = polynomial_basis(signal.size(), degree);
  std::vector<double> out(signal.begin(), signal.end());
  for (const auto& q : basis) {
    const double coef = std::inner_product(signal.begin(), signal.end(), q.begin(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= coef * q[i];
  }
  return out;
}

std::vector<Biquad> design_bandpass(double fs, double lo, double hi, int order) {
  const double nyquist = fs / 2.0;
  if (!(lo > 0.0 && lo < hi && hi < nyquist)) {
    fail(ErrorCode::Parameter, "band-pass edges must satisfy 0 < lo < hi < fs/2");
  }
  if (order < 2 || order % 2 != 0) fail(ErrorCode::Parameter, "filter order must be even and >= 2");
  hi = std::min(hi, kUpperEdgeClamp * nyquist);

  std::vector<Biquad> sections;
  const int pairs = order / 2;
  const double k_hp = std::tan(M_PI * lo / fs);
  const double k_lp = std::tan(M_PI * hi / fs);
  for (int i = 0; i < pairs; ++i) {
    const double q = 1.0 / (2.0 * std::sin((2.0 * i + 1.0) * M_PI / (2.0 * order)));
    {
      const double k = k_hp;
      const double norm = 1.0 / (1.0 + k / q + k * k);
      sections.push_back({norm, -2.0 * norm, norm, 2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm});
    }
    {
      const double k = k_lp;
      const double norm = 1.0 / (1.0 + k / q + k * k);
      const double b0 = k * k * norm;
      sections.push_back({b0, 2.0 * b0, b0, 2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm});
    }
  }
  return sections;
}

std::vector<double> filter_forward(std::span<const Biquad> sections, std::span<const double> x) {
  return run_sections(sections, x, std::vector<std::array<double, 2>>(sections.size(), {0.0, 0.0}));
}

std::vector<double> bandpass(std::span<const double> signal, double fs, double lo, double hi, int order) {
  const auto sections = design_bandpass(fs, lo, hi, order);
  check_finite(signal);
  const std::size_t n = signal.size();
  if (n == 0) return {};

  const std::size_t padlen = std::min<std::size_t>(n - 1, 3 * (2 * sections.size() + 1));
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * signal[0] - signal[i]);
  ext.insert(ext.end(), signal.begin(), signal.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * signal[n - 1] - signal[n - 1 - i]);

  const auto zi = step_initial_state(sections);
  auto scaled = [&](double level) {
    auto z = zi;
    for (auto& s : z) {
      s[0] *= level;
      s[1] *= level;
    }
    return z;
  };
  auto y = run_sections(sections, ext, scaled(ext.front()));
  std::reverse(y.begin(), y.end());
  y = run_sections(sections, y, scaled(y.front()));
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(padlen), y.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

SegmentResult segment(const RawRecording& rec) {
  const auto& markers = rec.markers;
  if (markers.size() % 2 != 0) fail(ErrorCode::Integrity, "unpaired trial markers");
  SegmentResult result;
  const std::size_t channels = rec.samples.cols();
  std::vector<bool> attached(rec.key_events.size(), false);

  for (std::size_t p = 0; p + 1 < markers.size(); p += 2) {
    const auto& start = markers[p];
    const auto& end = markers[p + 1];
    if (start.kind != MarkerKind::Start || end.kind != MarkerKind::End || end.sample_index <= start.sample_index ||
        end.sample_index > rec.samples.rows()) {
      fail(ErrorCode::Integrity, "invalid marker pair " + std::to_string(p / 2));
    }
    const std::size_t len = end.sample_index - start.sample_index;
    if (len < kMinTrialSamples) {
      result.dropped_trials.push_back(p / 2);
      continue;
    }
    TrialSpan span;
    span.start = start.sample_index;
    span.end = end.sample_index;
    span.eeg = Matrix(channels, len);
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t i = 0; i < len; ++i) span.eeg(c, i) = rec.samples(span.start + i, c);

    const double t0 = static_cast<double>(span.start) * 1000.0 / rec.sample_rate_hz;
    const double t1 = static_cast<double>(span.end) * 1000.0 / rec.sample_rate_hz;
    for (std::size_t e = 0; e < rec.key_events.size(); ++e) {
      const auto& ev = rec.key_events[e];
      if (ev.t_ms >= t0 && ev.t_ms < t1) {
        span.key_events.push_back(ev);
        attached[e] = true;
      }
    }
    result.spans.push_back(std::move(span));
  }
  result.unattached_events = static_cast<std::size_t>(std::count(attached.begin(), attached.end(), false));
  return result;
}

std::vector<double> resample(std::span<const double> x, std::size_t target) {
  const std::size_t n = x.size();
  if (n < 2) fail(ErrorCode::InsufficientData, "resampling needs at least 2 samples");
  if (target < 2) fail(ErrorCode::Parameter, "resampling target must be at least 2");
  std::vector<double> out(target);
  const double denom = static_cast<double>(target - 1);
  for (std::size_t j = 0; j < target; ++j) {
    const double pos = static_cast<double>(j * (n - 1)) / denom;
    auto i0 = static_cast<std::size_t>(std::floor(pos));
    if (i0 >= n - 1) {
      out[j] = x[n - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    out[j] = frac == 0.0 ? x[i0] : x[i0] + frac * (x[i0 + 1] - x[i0]);
  }
  return out;
}

Matrix resample(const Matrix& channels, std::size_t target) {
  Matrix out(channels.rows(), target);
  for (std::size_t c = 0; c < channels.rows(); ++c) {
    const auto r = resample(channels.row(c), target);
    std::copy(r.begin(), r.end(), out.row(c).begin());
  }
  return out;
}

PreprocessResult preprocess(const RawRecording& rec, const TrialLabel& first, const PreprocessConfig& config) {
  RawRecording filtered = rec;
  const std::size_t n = rec.samples.rows();
  for (std::size_t c = 0; c < rec.samples.cols(); ++c) {
    const auto raw = rec.samples.column(c);
    const auto flat = correct_baseline(raw);
    const auto band = bandpass(flat, rec.sample_rate_hz, config.lo_hz, config.hi_hz, config.filter_order);
    for (std::size_t i = 0; i < n; ++i) filtered.samples(i, c) = band[i];
  }
  auto seg = segment(filtered);
  PreprocessResult out;
  out.dropped_trials = std::move(seg.dropped_trials);
  out.unattached_events = seg.unattached_events;
  int trial_id = first.trial;
  std::size_t pair = 0;
  std::size_t dropped_cursor = 0;
  for (auto& span : seg.spans) {
    // Keep trial ids aligned with marker-pair order, skipping dropped pairs.
    while (dropped_cursor < out.dropped_trials.size() && out.dropped_trials[dropped_cursor] == pair) {
      ++dropped_cursor;
      ++pair;
    }
    TrialSample t;
    t.eeg = resample(span.eeg, config.trial_length);
    t.key_events = std::move(span.key_events);
    t.label = {first.subject, first.session, trial_id + static_cast<int>(pair)};
    out.trials.push_back(std::move(t));
    ++pair;
  }
  return out;
}

}  // namespace biokey::dsp
