#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "biokey/dataio.hpp"
#include "biokey/features.hpp"
#include "testing.hpp"

using namespace biokey;
using testing::error_of;

namespace {

std::string recording_csv(const std::vector<int>& markers) {
  std::ostringstream out;
  out << "t,AF3,T7,Pz,T8,AF4,marker\n";
  for (std::size_t i = 0; i < markers.size(); ++i) {
    out << i / 128.0 << ",1,2,3,4,5," << markers[i] << "\n";
  }
  return out.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("biokey_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("recording with two marker pairs parses into two trials") {
  std::vector<int> markers(40, 0);
  markers[2] = 1;
  markers[10] = 2;
  markers[20] = 1;
  markers[30] = 2;
  std::istringstream in(recording_csv(markers));
  const auto rec = dataio::parse_recording(in);
  CHECK(rec.trial_count() == 2);
  CHECK(rec.samples.rows() == 40);
  CHECK(rec.samples.cols() == 5);
  CHECK(rec.samples(7, 2) == 3.0);
  CHECK(rec.sample_rate_hz == doctest::Approx(128.0));
  CHECK(rec.markers[2] == Marker{20, MarkerKind::Start});
}

TEST_CASE("recording with a start marker but no end is an integrity error") {
  std::vector<int> markers(10, 0);
  markers[3] = 1;
  std::istringstream in(recording_csv(markers));
  CHECK(error_of([&] { dataio::parse_recording(in); }) == ErrorCode::Integrity);
}

TEST_CASE("overlapping markers are an integrity error") {
  std::vector<int> markers(10, 0);
  markers[1] = 1;
  markers[2] = 1;
  markers[5] = 2;
  markers[6] = 2;
  std::istringstream in(recording_csv(markers));
  CHECK(error_of([&] { dataio::parse_recording(in); }) == ErrorCode::Integrity);
}

TEST_CASE("recording without the marker column is a format error") {
  std::istringstream in("t,AF3,T7,Pz,T8,AF4\n0,1,2,3,4,5\n");
  CHECK(error_of([&] { dataio::parse_recording(in); }) == ErrorCode::Format);
  std::istringstream rows("t,AF3,T7,Pz,T8,AF4,marker\n0,1,2,3,4,5\n");
  CHECK(error_of([&] { dataio::parse_recording(rows); }) == ErrorCode::Format);
}

TEST_CASE("non-monotone time is an integrity error") {
  std::istringstream in("t,AF3,T7,Pz,T8,AF4,marker\n0.5,1,2,3,4,5,0\n0.25,1,2,3,4,5,0\n");
  CHECK(error_of([&] { dataio::parse_recording(in); }) == ErrorCode::Integrity);
}

TEST_CASE("recording round trip through the CSV writer") {
  RawRecording rec;
  rec.channels.assign(kChannelNames.begin(), kChannelNames.end());
  rec.samples = Matrix(30, 5);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t c = 0; c < 5; ++c) rec.samples(i, c) = 0.25 * static_cast<double>(i) - static_cast<double>(c);
  rec.markers = {{4, MarkerKind::Start}, {25, MarkerKind::End}};
  std::ostringstream out;
  dataio::write_recording(rec, out);
  std::istringstream in(out.str());
  const auto back = dataio::parse_recording(in);
  CHECK(back.samples == rec.samples);
  CHECK(back.markers == rec.markers);
}

TEST_CASE("keystroke log with 24 events yields 12 pairs") {
  const auto events = testing::typed(default_password_keys(), 90.0, 200.0, 10.0);
  std::ostringstream out;
  dataio::write_keystrokes(events, out);
  std::istringstream in(out.str());
  const auto back = dataio::parse_keystrokes(in);
  REQUIRE(back.size() == 24);
  CHECK(features::pair_key_events(back).size() == 12);
}

TEST_CASE("keystroke log is sorted by time on load") {
  std::istringstream in(
      "{\"key\":\"b\",\"action\":\"down\",\"t_ms\":200}\n"
      "{\"key\":\"a\",\"action\":\"down\",\"t_ms\":0}\n"
      "{\"key\":\"a\",\"action\":\"up\",\"t_ms\":100}\n"
      "{\"key\":\"b\",\"action\":\"up\",\"t_ms\":300}\n");
  const auto events = dataio::parse_keystrokes(in);
  REQUIRE(events.size() == 4);
  CHECK(events[0].key == "a");
  CHECK(events[3].t_ms == 300.0);
}

TEST_CASE("keystroke action other than down/up is a format error") {
  std::istringstream in("{\"key\":\"q\",\"action\":\"press\",\"t_ms\":1}\n");
  CHECK(error_of([&] { dataio::parse_keystrokes(in); }) == ErrorCode::Format);
}

TEST_CASE("duplicated down before up is an integrity error") {
  std::istringstream in(
      "{\"key\":\"q\",\"action\":\"down\",\"t_ms\":1}\n"
      "{\"key\":\"q\",\"action\":\"down\",\"t_ms\":2}\n"
      "{\"key\":\"q\",\"action\":\"up\",\"t_ms\":3}\n");
  CHECK(error_of([&] { dataio::parse_keystrokes(in); }) == ErrorCode::Integrity);
}

TEST_CASE("release without press is an integrity error") {
  std::istringstream in("{\"key\":\"q\",\"action\":\"up\",\"t_ms\":3}\n");
  CHECK(error_of([&] { dataio::parse_keystrokes(in); }) == ErrorCode::Integrity);
}

TEST_CASE("default password has 12 keys with two caps lock presses") {
  const auto keys = default_password_keys();
  CHECK(keys.size() == kPasswordLength);
  CHECK(std::count(keys.begin(), keys.end(), "CapsLock") == 2);
}

TEST_CASE("full-size manifest describes 5000 trials") {
  DatasetManifest m;
  m.subjects = 10;
  m.sessions = 10;
  m.trials_per_session = 50;
  CHECK(m.total_trials() == 5000);
}

TEST_CASE("manifest JSON round trip") {
  DatasetManifest m;
  m.subjects = 3;
  m.sessions = 2;
  m.trials_per_session = 4;
  m.seed = 99;
  const auto back = dataio::manifest_from_json(dataio::manifest_to_json(m));
  CHECK(back.subjects == 3);
  CHECK(back.sessions == 2);
  CHECK(back.trials_per_session == 4);
  CHECK(back.seed == 99);
  CHECK(back.password_keys == m.password_keys);
}

TEST_CASE("synthetic trial is a pure function of manifest and label") {
  DatasetManifest m;
  m.subjects = 2;
  m.sessions = 1;
  m.trials_per_session = 5;
  m.seed = 7;
  const auto a = dataio::synth_trial(m, {1, 0, 3});
  const auto b = dataio::synth_trial(m, {1, 0, 3});
  CHECK(a.recording.samples == b.recording.samples);
  CHECK(a.recording.key_events == b.recording.key_events);
  CHECK(a.recording.trial_count() == 1);
  const auto c = dataio::synth_trial(m, {1, 0, 4});
  CHECK_FALSE(a.recording.samples == c.recording.samples);
}

TEST_CASE("synthetic subjects have distinct key-hold profiles") {
  DatasetManifest m;
  m.subjects = 2;
  m.sessions = 1;
  m.trials_per_session = 5;
  m.seed = 7;
  std::vector<double> mean_hold(2, 0.0);
  for (int s = 0; s < 2; ++s) {
    for (int t = 0; t < 5; ++t) {
      const auto trial = dataio::synth_trial(m, {s, 0, t});
      const auto fv = features::keystroke_features(trial.recording.key_events);
      for (std::size_t i = 0; i < 12; ++i) mean_hold[static_cast<std::size_t>(s)] += fv.values[i] / 60.0;
      // Typing fits inside the marked EEG span.
      const auto& mk = trial.recording.markers;
      REQUIRE(mk.size() == 2);
      CHECK(mk[1].sample_index - mk[0].sample_index >= 10);
    }
  }
  CHECK(std::abs(mean_hold[0] - mean_hold[1]) > 0.0);
}

TEST_CASE("synthetic dataset writes identical bytes twice") {
  DatasetManifest m;
  m.subjects = 2;
  m.sessions = 1;
  m.trials_per_session = 2;
  m.seed = 5;
  const auto a = scratch_dir("synth_a");
  const auto b = scratch_dir("synth_b");
  dataio::synth_dataset(m, a);
  dataio::synth_dataset(m, b);
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a);
    std::ifstream fa(entry.path()), fb(b / rel);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    ++files;
  }
  CHECK(files == 1 + 2 * 2 * 2);  // manifest plus csv/jsonl per trial
  CHECK(dataio::load_manifest(a).seed == 5);
  CHECK(std::filesystem::exists(dataio::trial_stem(a, {1, 0, 1}).replace_extension(".csv")));
}

TEST_CASE("feature matrix round trip is lossless") {
  FeatureMatrix m;
  m.feature_names = {"a", "b", "c", "d", "e"};
  Rng rng(3);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> row;
    for (int j = 0; j < 5; ++j) row.push_back(rng.normal() * std::pow(10.0, j - 2));
    m.rows.append_row(row);
    m.labels.push_back({i, i + 1, i + 2});
  }
  m.norm_stats = NormStats{{0, 1, 2, 3, 4}, {1, 2, 3, 4, 5.5}};
  std::stringstream io;
  dataio::write_feature_matrix(m, io);
  const auto back = dataio::read_feature_matrix(io);
  CHECK(back.feature_names == m.feature_names);
  CHECK(back.labels == m.labels);
  CHECK(back.norm_stats == m.norm_stats);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(std::abs(back.rows(i, j) - m.rows(i, j)) <= 1e-12 * std::abs(m.rows(i, j)));
}

TEST_CASE("feature matrix with duplicate names is rejected") {
  FeatureMatrix m;
  m.feature_names = {"AF3_mean", "AF3_mean"};
  std::ostringstream out;
  CHECK(error_of([&] { dataio::write_feature_matrix(m, out); }) == ErrorCode::Format);
  std::istringstream in("subject,session,trial,x,x\n");
  CHECK(error_of([&] { dataio::read_feature_matrix(in); }) == ErrorCode::Format);
}

TEST_CASE("empty feature matrix is a header-only file") {
  FeatureMatrix m;
  m.feature_names = {"x", "y"};
  std::stringstream io;
  dataio::write_feature_matrix(m, io);
  CHECK(io.str() == "subject,session,trial,x,y\n");
  const auto back = dataio::read_feature_matrix(io);
  CHECK(back.size() == 0);
  CHECK(back.feature_names == m.feature_names);
}
