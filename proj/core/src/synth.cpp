// Seeded synthetic EEG + keystroke dataset generator.
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>

#include "biokey/dataio.hpp"
#include "biokey/error.hpp"
#include "biokey/fft.hpp"
#include "biokey/random.hpp"

namespace biokey::dataio {

namespace {

constexpr std::size_t kHolds = kPasswordLength;
constexpr std::size_t kTransitions = kPasswordLength - 1;

// Keystroke generator fixtures (milliseconds).
constexpr double kHoldMeanLo = 60.0;
constexpr double kHoldMeanHi = 180.0;
constexpr double kLatencyMeanLo = 80.0;
constexpr double kLatencyMeanHi = 350.0;
constexpr double kTrialNoiseMs = 12.0;
constexpr double kSessionDriftMs = 8.0;
constexpr double kMinHoldMs = 20.0;
constexpr double kMinLatencyMs = 30.0;
constexpr double kTimeQuantumMs = 1.0 / 16.0;

// EEG generator fixtures.
struct Band {
  double lo;
  double hi;
  double base_amplitude;
};
constexpr std::array<Band, 5> kBands = {{
    {0.5, 4.0, 2.0},
    {4.0, 7.0, 1.4},
    {7.0, 13.0, 1.6},
    {13.0, 30.0, 1.0},
    {30.0, 60.0, 0.5},
}};
constexpr double kSubjectBandSpread = 0.35;  // log-amplitude sd across subjects
constexpr double kTrialBandSpread = 0.35;    // log-amplitude sd across trials
constexpr double kSessionGainSd = 0.05;
constexpr double kBackgroundAmplitude = 0.6;  // 1/f component
constexpr double kDriftAmplitude = 1.5;       // slow baseline wander
constexpr double kPaddingSeconds = 1.5;
constexpr double kOutputScale = 0.4;

struct SubjectProfile {
  std::array<double, kHolds> hold_mean{};
  std::array<double, kTransitions> latency_mean{};
  std::array<std::array<double, kBands.size()>, kChannelCount> band_amplitude{};
};

struct SessionState {
  std::array<double, kHolds + kTransitions> drift{};
  std::array<double, kChannelCount> gain{};
};

SubjectProfile make_subject(std::uint64_t seed, int subject) {
  Rng rng(derive_seed(seed, {1, static_cast<std::uint64_t>(subject)}));
  SubjectProfile p;
  for (auto& h : p.hold_mean) h = rng.uniform(kHoldMeanLo, kHoldMeanHi);
  for (auto& l : p.latency_mean) l = rng.uniform(kLatencyMeanLo, kLatencyMeanHi);
  for (auto& channel : p.band_amplitude) {
    for (std::size_t b = 0; b < kBands.size(); ++b) {
      channel[b] = kBands[b].base_amplitude * std::exp(kSubjectBandSpread * rng.normal());
    }
  }
  return p;
}

SessionState make_session(std::uint64_t seed, int subject, int session) {
  Rng rng(derive_seed(seed, {2, static_cast<std::uint64_t>(subject), static_cast<std::uint64_t>(session)}));
  SessionState s;
  for (auto& d : s.drift) d = rng.normal(0.0, kSessionDriftMs);
  for (auto& g : s.gain) g = rng.normal(1.0, kSessionGainSd);
  return s;
}

double quantize(double ms) { return std::round(ms / kTimeQuantumMs) * kTimeQuantumMs; }

std::vector<KeyEvent> make_key_events(const SubjectProfile& p, const SessionState& s,
                                      const std::vector<std::string>& keys, double start_ms, Rng& rng) {
  std::array<double, kHolds> down{};
  std::array<double, kHolds> up{};
  down[0] = quantize(start_ms);
  for (std::size_t i = 0; i < kTransitions; ++i) {
    const double latency = std::max(kMinLatencyMs, p.latency_mean[i] + s.drift[kHolds + i] + rng.normal(0.0, kTrialNoiseMs));
    down[i + 1] = quantize(down[i] + latency);
  }
  for (std::size_t i = 0; i < kHolds; ++i) {
    const double hold = std::max(kMinHoldMs, p.hold_mean[i] + s.drift[i] + rng.normal(0.0, kTrialNoiseMs));
    up[i] = quantize(down[i] + hold);
    // A repeated key must be released before it is pressed again.
    for (std::size_t j = i + 1; j < kHolds; ++j) {
      if (keys[j] == keys[i]) {
        up[i] = std::min(up[i], down[j] - 5.0);
        break;
      }
    }
  }
  std::vector<KeyEvent> events;
  events.reserve(2 * kHolds);
  for (std::size_t i = 0; i < kHolds; ++i) {
    events.push_back({keys[i], KeyAction::Down, down[i]});
    events.push_back({keys[i], KeyAction::Up, up[i]});
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const KeyEvent& a, const KeyEvent& b) { return a.t_ms < b.t_ms; });
  return events;
}

// Colored Gaussian noise synthesized in the frequency domain from a target power profile.
std::vector<double> synth_channel(std::size_t n, const std::array<double, kBands.size()>& amplitude, double gain,
                                  Rng& rng) {
  std::size_t fft_n = 1;
  while (fft_n < n) fft_n <<= 1;
  const double df = kSampleRateHz / static_cast<double>(fft_n);
  std::vector<std::complex<double>> spectrum(fft_n / 2 + 1);
  std::array<double, kBands.size()> trial_mod{};
  for (auto& m : trial_mod) m = std::exp(kTrialBandSpread * rng.normal());

  for (std::size_t k = 1; k < spectrum.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    double power = kBackgroundAmplitude * kBackgroundAmplitude / std::max(f, 0.5);
    for (std::size_t b = 0; b < kBands.size(); ++b) {
      if (f >= kBands[b].lo && f < kBands[b].hi) {
        const double a = amplitude[b] * trial_mod[b];
        power += a * a / (kBands[b].hi - kBands[b].lo);
      }
    }
    // Scaling so that the time-domain variance equals the integrated power profile.
    const double sd = std::sqrt(power * df / 2.0) * static_cast<double>(fft_n);
    const double re = rng.normal();
    const double im = rng.normal();
    spectrum[k] = {sd * re, sd * im};
  }
  if (fft_n >= 2) spectrum.back() = {spectrum.back().real(), 0.0};
  auto x = fft::real_inverse(spectrum, fft_n);
  x.resize(n);

  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  const double offset = rng.normal(0.0, 1.0);
  const double slope = rng.normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRateHz;
    const double wander = kDriftAmplitude * (offset + 0.3 * slope * t + std::sin(2.0 * M_PI * 0.07 * t + phase));
    x[i] = kOutputScale * (gain * x[i] + wander);
  }
  return x;
}

}  // namespace

SynthTrial synth_trial(const DatasetManifest& manifest, const TrialLabel& label) {
  if (manifest.password_keys.size() != kPasswordLength) {
    fail(ErrorCode::Parameter, "password must have 12 keys");
  }
  const auto profile = make_subject(manifest.seed, label.subject);
  const auto session = make_session(manifest.seed, label.subject, label.session);
  const std::size_t pad = static_cast<std::size_t>(kPaddingSeconds * kSampleRateHz);
  const double start_ms = static_cast<double>(pad) * 1000.0 / kSampleRateHz;

  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(manifest.seed, {3, static_cast<std::uint64_t>(label.subject),
                                        static_cast<std::uint64_t>(label.session),
                                        static_cast<std::uint64_t>(label.trial), attempt}));
    auto events = make_key_events(profile, session, manifest.password_keys, start_ms, rng);
    const double last_ms = events.back().t_ms;
    const auto end = static_cast<std::size_t>(std::floor(last_ms * kSampleRateHz / 1000.0)) + 1;
    if (end - pad < 10) continue;  // degenerate typing span; never emitted

    SynthTrial out;
    out.label = label;
    auto& rec = out.recording;
    rec.sample_rate_hz = kSampleRateHz;
    rec.channels.assign(kChannelNames.begin(), kChannelNames.end());
    const std::size_t n = end + pad;
    rec.samples = Matrix(n, kChannelCount);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const auto x = synth_channel(n, profile.band_amplitude[c], session.gain[c], rng);
      for (std::size_t i = 0; i < n; ++i) rec.samples(i, c) = x[i];
    }
    rec.markers = {{pad, MarkerKind::Start}, {end, MarkerKind::End}};
    rec.key_events = std::move(events);
    return out;
  }
}

void synth_dataset(const DatasetManifest& manifest, const std::filesystem::path& out_dir) {
  if (manifest.subjects < 2) fail(ErrorCode::Parameter, "synthetic dataset needs at least 2 subjects");
  if (manifest.sessions < 1 || manifest.trials_per_session < 1) {
    fail(ErrorCode::Parameter, "sessions and trials_per_session must be positive");
  }
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream m(out_dir / "manifest.json", std::ios::binary);
    m << manifest_to_json(manifest) << '\n';
  }
  for (int s = 0; s < manifest.subjects; ++s) {
    for (int k = 0; k < manifest.sessions; ++k) {
      for (int t = 0; t < manifest.trials_per_session; ++t) {
        const auto trial = synth_trial(manifest, {s, k, t});
        const auto stem = trial_stem(out_dir, trial.label);
        save_recording(trial.recording, stem.string() + ".csv");
        save_keystrokes(trial.recording.key_events, stem.string() + ".jsonl");
      }
    }
  }
}

}  // namespace biokey::dataio
