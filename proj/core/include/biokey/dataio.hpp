#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biokey/matrix.hpp"

namespace biokey {

inline constexpr double kSampleRateHz = 128.0;
inline constexpr std::size_t kChannelCount = 5;
inline constexpr std::size_t kPasswordLength = 12;

/// Recording column order (Emotiv Insight montage).
inline constexpr std::array<std::string_view, kChannelCount> kChannelNames = {"AF3", "T7", "Pz", "T8",
                                                                              "AF4"};

/// "qu-ELEC371" typed with caps lock toggled on and off around "ELEC".
std::vector<std::string> default_password_keys();

enum class KeyAction { Down, Up };

struct KeyEvent {
  std::string key;
  KeyAction action = KeyAction::Down;
  double t_ms = 0.0;

  friend bool operator==(const KeyEvent&, const KeyEvent&) = default;
};

enum class MarkerKind { Start, End };

struct Marker {
  std::size_t sample_index = 0;
  MarkerKind kind = MarkerKind::Start;

  friend bool operator==(const Marker&, const Marker&) = default;
};

struct RawRecording {
  double sample_rate_hz = kSampleRateHz;
  std::vector<std::string> channels;
  Matrix samples;  // n_samples x 5
  std::vector<Marker> markers;
  std::vector<KeyEvent> key_events;

  std::size_t trial_count() const { return markers.size() / 2; }
};

struct TrialLabel {
  int subject = 0;
  int session = 0;
  int trial = 0;

  friend bool operator==(const TrialLabel&, const TrialLabel&) = default;
  friend auto operator<=>(const TrialLabel&, const TrialLabel&) = default;
};

struct NormStats {
  std::vector<double> min;
  std::vector<double> max;

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

struct FeatureMatrix {
  std::vector<std::string> feature_names;
  Matrix rows;
  std::vector<TrialLabel> labels;
  std::optional<NormStats> norm_stats;

  std::size_t size() const { return labels.size(); }
  std::size_t width() const { return feature_names.size(); }

  FeatureMatrix select_rows(std::span<const std::size_t> idx) const;
  FeatureMatrix select_cols(std::span<const std::size_t> idx) const;
};

struct DatasetManifest {
  int subjects = 10;
  int sessions = 10;
  int trials_per_session = 50;
  std::vector<std::string> password_keys = default_password_keys();
  std::uint64_t seed = 42;

  std::size_t total_trials() const {
    return static_cast<std::size_t>(subjects) * sessions * trials_per_session;
  }
};

namespace dataio {

RawRecording parse_recording(std::istream& in);
RawRecording load_recording(const std::filesystem::path& path);
void write_recording(const RawRecording& rec, std::ostream& out);
void save_recording(const RawRecording& rec, const std::filesystem::path& path);

/// Parses JSONL key events, sorts them by time and validates down/up pairing.
std::vector<KeyEvent> parse_keystrokes(std::istream& in);
std::vector<KeyEvent> load_keystrokes(const std::filesystem::path& path);
void write_keystrokes(const std::vector<KeyEvent>& events, std::ostream& out);
void save_keystrokes(const std::vector<KeyEvent>& events, const std::filesystem::path& path);
/// Throws Integrity when a key is released without being pressed or pressed twice.
void validate_key_pairing(const std::vector<KeyEvent>& events);

void write_feature_matrix(const FeatureMatrix& m, std::ostream& out);
void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_feature_matrix(std::istream& in);
FeatureMatrix read_feature_matrix(const std::filesystem::path& path);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(std::string_view text);
DatasetManifest load_manifest(const std::filesystem::path& dataset_dir);

std::filesystem::path trial_stem(const std::filesystem::path& dataset_dir, const TrialLabel& label);

/// One generated trial: a recording holding a single marker pair and its key log.
struct SynthTrial {
  TrialLabel label;
  RawRecording recording;
};

/// Generates a single trial in memory; synth_dataset writes exactly these.
SynthTrial synth_trial(const DatasetManifest& manifest, const TrialLabel& label);

/// Writes `manifest.json` plus `subject_<s>/session_<k>/trial_<t>.{csv,jsonl}`.
void synth_dataset(const DatasetManifest& manifest, const std::filesystem::path& out_dir);

}  // namespace dataio
}  // namespace biokey
