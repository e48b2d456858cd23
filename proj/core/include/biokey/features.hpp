#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "biokey/dataio.hpp"
#include "biokey/dsp.hpp"

namespace biokey {

/// Ordered named feature values. `degenerate` is raised when a statistic
/// was undefined for the input (constant or all-zero signal) and was
/// replaced by 0.
struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
  bool degenerate = false;

  std::size_t size() const { return values.size(); }
  void append(const FeatureVector& other, const std::string& prefix = {});
  /// Value by name; throws Parameter when absent.
  double at(const std::string& name) const;
};

enum class WaveletScheme { Wpt18, Dwt7 };

namespace features {

inline constexpr std::size_t kTimeFeatureCount = 13;
inline constexpr std::size_t kSpectralFeatureCount = 10;
inline constexpr std::size_t kKeystrokeFeatureCount = 45;
inline constexpr std::size_t kEntropyBins = 64;
inline constexpr double kM2fHalfWidthHz = 5.0;
inline constexpr double kSpectrumCutoffHz = 63.0;

/// Percentile by 1-based rank r = (p/100) n over ascending `sorted`: the
/// average of elements r and r+1 when r is integral, otherwise element ceil(r).
double percentile(std::span<const double> sorted, double p);

FeatureVector time_features(std::span<const double> x);
FeatureVector spectral_features(std::span<const double> x, double fs);
FeatureVector wavelet_features(std::span<const double> x, WaveletScheme scheme = WaveletScheme::Wpt18);
std::size_t wavelet_feature_count(WaveletScheme scheme);

/// Signal magnitude area over all channels: (1/n) sum_c sum_i |x_c[i]|.
double smat(const Matrix& trial);

/// Channel labels used in feature names (AF3, T7, PZ, T8, AF4).
std::string channel_label(std::size_t channel);

FeatureVector eeg_feature_vector(const TrialSample& trial, WaveletScheme scheme = WaveletScheme::Wpt18);
std::vector<std::string> eeg_feature_names(WaveletScheme scheme = WaveletScheme::Wpt18);

/// A pressed key with its release time, in press order.
struct KeyPress {
  std::string key;
  double down_ms = 0.0;
  double up_ms = 0.0;
};

/// Pairs each press with the next release of the same key and orders the
/// pairs by press time. Throws Integrity on an unmatched press or release.
std::vector<KeyPress> pair_key_events(const std::vector<KeyEvent>& events);

/// hold_1..12, downdown_1..11, upup_1..11, updown_1..11 in milliseconds.
FeatureVector keystroke_features(const std::vector<KeyEvent>& events);
std::vector<std::string> keystroke_feature_names();

/// Min-max scaling to [0, 1]. Without `stats`, statistics are taken from
/// `m`; with them, values are mapped and clamped. Constant columns map to 0.5.
std::pair<FeatureMatrix, NormStats> minmax_normalize(const FeatureMatrix& m,
                                                     const std::optional<NormStats>& stats = std::nullopt);
NormStats compute_norm_stats(const Matrix& rows);
void apply_norm_stats(Matrix& rows, const NormStats& stats);

}  // namespace features
}  // namespace biokey
