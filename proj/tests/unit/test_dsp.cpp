#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "biokey/dsp.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace biokey;
using testing::error_of;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sine(std::size_t n, double hz, double fs, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * kPi * hz * static_cast<double>(i) / fs + phase);
  return x;
}

double poly(double t) { return 3.0 - 2.0 * t + 0.5 * t * t + 4.0 * std::pow(t, 3) - std::pow(t, 4) + 0.7 * std::pow(t, 6); }

double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace

TEST_CASE("baseline removes an exact degree-6 polynomial") {
  std::vector<double> x(1024);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = poly(-1.0 + 2.0 * static_cast<double>(i) / 1023.0);
  const double peak = *std::max_element(x.begin(), x.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  const auto out = dsp::correct_baseline(x);
  for (double v : out) CHECK(std::abs(v) <= 1e-8 * std::abs(peak));
}

TEST_CASE("baseline leaves a sinusoid riding on a polynomial") {
  const auto s = sine(1024, 10.0, 128.0);
  std::vector<double> x(1024);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = s[i] + 20.0 * poly(-1.0 + 2.0 * static_cast<double>(i) / 1023.0);
  const auto out = dsp::correct_baseline(x);
  std::vector<double> err(1024);
  for (std::size_t i = 0; i < 1024; ++i) err[i] = out[i] - s[i];
  // The error is exactly the part of the sinusoid inside the polynomial span.
  const auto resid = oracle::baseline_residual(s, 6);
  for (std::size_t i = 0; i < 1024; ++i) CHECK(std::abs(err[i] + (s[i] - resid[i])) <= 1e-8);
  CHECK(rms(err) <= 0.026 * rms(s));
}

TEST_CASE("baseline sinusoid error within two percent" * doctest::may_fail()) {
  // Least squares leaves 2.52% of this sinusoid in the fitted polynomial.
  const auto s = sine(1024, 10.0, 128.0);
  std::vector<double> x(1024);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = s[i] + 20.0 * poly(-1.0 + 2.0 * static_cast<double>(i) / 1023.0);
  const auto out = dsp::correct_baseline(x);
  std::vector<double> err(1024);
  for (std::size_t i = 0; i < 1024; ++i) err[i] = out[i] - s[i];
  CHECK(rms(err) <= 0.02 * rms(s));
}

TEST_CASE("baseline matches a normal-equation least-squares fit") {
  const auto x = testing::white_noise(777, 11, 3.0);
  const auto out = dsp::correct_baseline(x);
  const auto ref = oracle::baseline_residual(x, 6);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(out[i] - ref[i]) <= 1e-8);
}

TEST_CASE("baseline of a constant is zero and the correction is idempotent") {
  const std::vector<double> c(100, 4.25);
  for (double v : dsp::correct_baseline(c)) CHECK(std::abs(v) <= 1e-12);
  const auto x = testing::white_noise(512, 2);
  const auto once = dsp::correct_baseline(x);
  const auto twice = dsp::correct_baseline(once);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(once[i] - twice[i]) <= 1e-8);
}

TEST_CASE("baseline needs at least 8 samples") {
  CHECK(error_of([] { dsp::correct_baseline(std::vector<double>(7, 1.0)); }) == ErrorCode::InsufficientData);
  CHECK_FALSE(error_of([] { dsp::correct_baseline(std::vector<double>(8, 1.0)); }));
}

TEST_CASE("band-pass keeps a 10 Hz sinusoid at unit amplitude") {
  const auto x = sine(1024, 10.0, 128.0);
  const auto y = dsp::bandpass(x, 128.0, 0.5, 63.0);
  const auto peak = std::max_element(y.begin() + 256, y.begin() + 768,
                                     [](double a, double b) { return std::abs(a) < std::abs(b); });
  CHECK(std::abs(*peak) >= 0.9);
  CHECK(std::abs(*peak) <= 1.1);
}

TEST_CASE("band-pass removes a DC offset") {
  auto x = testing::white_noise(1024, 4);
  for (auto& v : x) v += 5.0;
  const auto y = dsp::bandpass(x, 128.0, 0.5, 63.0);
  double mean = 0.0;
  for (double v : y) mean += v / static_cast<double>(y.size());
  CHECK(std::abs(mean) <= 0.05);
}

TEST_CASE("band-pass passband is flat within 1 dB") {
  for (double hz : {1.0, 2.0, 5.0, 10.0, 20.0, 35.0, 45.0, 50.4}) {
    const auto x = sine(8192, hz, 128.0);
    const auto y = dsp::bandpass(x, 128.0, 0.5, 63.0);
    std::vector<double> mid_in(x.begin() + 2048, x.end() - 2048), mid_out(y.begin() + 2048, y.end() - 2048);
    const double gain_db = 20.0 * std::log10(rms(mid_out) / rms(mid_in));
    INFO("frequency " << hz);
    CHECK(std::abs(gain_db) <= 1.0);
  }
}

TEST_CASE("band-pass of zeros is zeros and invalid bands are rejected") {
  for (double v : dsp::bandpass(std::vector<double>(300, 0.0), 128.0, 0.5, 63.0)) CHECK(v == 0.0);
  const auto x = testing::white_noise(300, 1);
  CHECK(error_of([&] { dsp::bandpass(x, 128.0, 63.0, 0.5); }) == ErrorCode::Parameter);
  CHECK(error_of([&] { dsp::bandpass(x, 128.0, 0.0, 10.0); }) == ErrorCode::Parameter);
  CHECK(error_of([&] { dsp::bandpass(x, 128.0, 1.0, 64.0); }) == ErrorCode::Parameter);
  auto bad = x;
  bad[5] = std::nan("");
  CHECK(error_of([&] { dsp::bandpass(bad, 128.0, 0.5, 30.0); }) == ErrorCode::Validation);
}

TEST_CASE("segmentation yields one span per marker pair") {
  RawRecording rec;
  rec.samples = Matrix(2000, 5, 1.0);
  rec.markers = {{100, MarkerKind::Start}, {900, MarkerKind::End}, {1000, MarkerKind::Start}, {1800, MarkerKind::End}};
  const double ms = 1000.0 / 128.0;
  rec.key_events = {{"a", KeyAction::Down, 150 * ms}, {"a", KeyAction::Up, 160 * ms},
                    {"b", KeyAction::Down, 1200 * ms}, {"b", KeyAction::Up, 1210 * ms},
                    {"c", KeyAction::Down, 950 * ms}};
  const auto seg = dsp::segment(rec);
  REQUIRE(seg.spans.size() == 2);
  CHECK(seg.spans[0].end - seg.spans[0].start == 800);
  CHECK(seg.spans[1].end - seg.spans[1].start == 800);
  CHECK(seg.spans[0].eeg.rows() == 5);
  CHECK(seg.spans[0].eeg.cols() == 800);
  CHECK(seg.spans[0].key_events.size() == 2);
  CHECK(seg.spans[1].key_events.size() == 2);
  CHECK(seg.unattached_events == 1);
  CHECK(seg.dropped_trials.empty());
}

TEST_CASE("spans shorter than 10 samples are dropped and reported") {
  RawRecording rec;
  rec.samples = Matrix(200, 5, 0.0);
  rec.markers = {{10, MarkerKind::Start}, {15, MarkerKind::End}, {50, MarkerKind::Start}, {150, MarkerKind::End}};
  const auto seg = dsp::segment(rec);
  CHECK(seg.spans.size() == 1);
  REQUIRE(seg.dropped_trials.size() == 1);
  CHECK(seg.dropped_trials[0] == 0);
}

TEST_CASE("resampling preserves identity, endpoints and lines") {
  const auto x = testing::white_noise(1024, 8);
  CHECK(dsp::resample(x) == x);

  std::vector<double> ramp(512);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i) / 511.0;
  const auto r = dsp::resample(ramp);
  REQUIRE(r.size() == 1024);
  CHECK(r.front() == 0.0);
  CHECK(r.back() == 1.0);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(r[i] - static_cast<double>(i) / 1023.0) <= 1e-9);

  const auto y = testing::white_noise(37, 9);
  const auto z = dsp::resample(y);
  CHECK(z.front() == y.front());
  CHECK(z.back() == y.back());
  CHECK(error_of([] { dsp::resample(std::vector<double>{1.0}); }) == ErrorCode::InsufficientData);
}

TEST_CASE("resampling a 900-sample sinusoid stretches its frequency") {
  // 10 Hz over 900 samples at 128 Hz spans 70.3 cycles; over 1024 output
  // samples that is 70.3 / 8 s = 8.79 Hz at the nominal rate.
  const auto x = sine(900, 10.0, 128.0);
  const auto y = dsp::resample(x);
  // Independent linear interpolation at the same grid.
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double pos = static_cast<double>(i) * 899.0 / 1023.0;
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min<std::size_t>(lo + 1, 899);
    const double ref = x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
    CHECK(std::abs(y[i] - ref) <= 1e-12);
  }
  const auto p = oracle::periodogram(y, 128.0);
  const auto k = static_cast<std::size_t>(std::max_element(p.power.begin() + 1, p.power.end()) - p.power.begin());
  const double expected = 10.0 * 900.0 / 1024.0;
  CHECK(std::abs(p.freq[k] - expected) <= 128.0 / 1024.0);
}

TEST_CASE("preprocessing emits 5 x 1024 trials with their key events") {
  DatasetManifest m;
  m.subjects = 2;
  m.sessions = 1;
  m.trials_per_session = 1;
  const auto synth = dataio::synth_trial(m, {1, 0, 0});
  const auto out = dsp::preprocess(synth.recording, {1, 0, 0});
  REQUIRE(out.trials.size() == 1);
  CHECK(out.trials[0].eeg.rows() == 5);
  CHECK(out.trials[0].eeg.cols() == 1024);
  CHECK(out.trials[0].key_events.size() == 24);
  CHECK(out.trials[0].label == TrialLabel{1, 0, 0});
}
