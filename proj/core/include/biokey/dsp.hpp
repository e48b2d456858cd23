#pragma once

#include <span>
#include <vector>

#include "biokey/dataio.hpp"
#include "biokey/matrix.hpp"

namespace biokey {

inline constexpr std::size_t kTrialLength = 1024;

/// One password-typing event after preprocessing.
struct TrialSample {
  Matrix eeg;  // kChannelCount x kTrialLength, channel-major
  std::vector<KeyEvent> key_events;
  TrialLabel label;
};

namespace dsp {

inline constexpr int kBaselineDegree = 6;
inline constexpr int kFilterOrder = 4;
/// Upper cutoffs closer to Nyquist than this fraction are clamped to it.
inline constexpr double kUpperEdgeClamp = 0.98;
inline constexpr std::size_t kMinTrialSamples = 10;

/// Subtracts the least-squares polynomial (degree 6) fitted over t in [-1, 1].
std::vector<double> correct_baseline(std::span<const double> signal, int degree = kBaselineDegree);

/// One second-order section, normalized so a0 = 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

/// Butterworth high-pass at `lo` cascaded with a Butterworth low-pass at
/// `hi`, each of `order` (even), as second-order sections.
std::vector<Biquad> design_bandpass(double fs, double lo, double hi, int order = kFilterOrder);

/// Single forward pass with zero initial state.
std::vector<double> filter_forward(std::span<const Biquad> sections, std::span<const double> x);

/// Zero-phase band-pass: odd-extension padding, steady-state initial
/// conditions, forward then backward pass.
std::vector<double> bandpass(std::span<const double> signal, double fs, double lo, double hi,
                             int order = kFilterOrder);

struct TrialSpan {
  std::size_t start = 0;  // inclusive sample index
  std::size_t end = 0;    // exclusive sample index
  Matrix eeg;             // channels x (end - start)
  std::vector<KeyEvent> key_events;
};

struct SegmentResult {
  std::vector<TrialSpan> spans;
  std::vector<std::size_t> dropped_trials;  // marker-pair indices shorter than kMinTrialSamples
  std::size_t unattached_events = 0;
};

SegmentResult segment(const RawRecording& rec);

/// Linear interpolation onto `target` uniformly spaced points; endpoints preserved exactly.
std::vector<double> resample(std::span<const double> x, std::size_t target = kTrialLength);
Matrix resample(const Matrix& channels, std::size_t target = kTrialLength);

struct PreprocessConfig {
  double lo_hz = 0.5;
  double hi_hz = 63.0;
  int filter_order = kFilterOrder;
  std::size_t trial_length = kTrialLength;
};

struct PreprocessResult {
  std::vector<TrialSample> trials;
  std::vector<std::size_t> dropped_trials;
  std::size_t unattached_events = 0;
};

/// Baseline correction and band-pass over the whole recording, then
/// segmentation by markers and resampling of each span. Trial ids are
/// assigned from `first` upward in marker order.
PreprocessResult preprocess(const RawRecording& rec, const TrialLabel& first, const PreprocessConfig& config = {});

}  // namespace dsp
}  // namespace biokey
