#include "biokey/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "biokey/error.hpp"

namespace biokey {

namespace {

using nlohmann::json;

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

double parse_double(std::string_view field, std::size_t line_no) {
  field = trim(field);
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": not a number: '" + std::string(field) + "'");
  }
  return value;
}

int parse_int(std::string_view field, std::size_t line_no) {
  field = trim(field);
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": not an integer: '" + std::string(field) + "'");
  }
  return value;
}

// Shortest representation that parses back to the identical double.
std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::NotFound, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::NotFound, "cannot write " + path.string());
  return out;
}

constexpr std::string_view kRecordingHeader = "t,AF3,T7,Pz,T8,AF4,marker";
constexpr std::string_view kMinRow = "#min";
constexpr std::string_view kMaxRow = "#max";

}  // namespace

std::vector<std::string> default_password_keys() {
  return {"q", "u", "-", "CapsLock", "E", "L", "E", "C", "CapsLock", "3", "7", "1"};
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> idx) const {
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.rows = rows.select_rows(idx);
  out.labels.reserve(idx.size());
  for (auto i : idx) out.labels.push_back(labels[i]);
  out.norm_stats = norm_stats;
  return out;
}

FeatureMatrix FeatureMatrix::select_cols(std::span<const std::size_t> idx) const {
  FeatureMatrix out;
  out.feature_names.reserve(idx.size());
  for (auto j : idx) out.feature_names.push_back(feature_names[j]);
  out.rows = rows.select_cols(idx);
  out.labels = labels;
  if (norm_stats) {
    NormStats s;
    for (auto j : idx) {
      s.min.push_back(norm_stats->min[j]);
      s.max.push_back(norm_stats->max[j]);
    }
    out.norm_stats = std::move(s);
  }
  return out;
}

namespace dataio {

RawRecording parse_recording(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trim(line) != kRecordingHeader) {
    fail(ErrorCode::Format, "recording header must be '" + std::string(kRecordingHeader) + "'");
  }
  RawRecording rec;
  rec.channels.assign(kChannelNames.begin(), kChannelNames.end());
  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != kChannelCount + 2) {
      fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": expected 7 columns, got " +
                                  std::to_string(fields.size()));
    }
    const double t = parse_double(fields[0], line_no);
    if (!times.empty() && !(t > times.back())) {
      fail(ErrorCode::Integrity, "line " + std::to_string(line_no) + ": time is not strictly increasing");
    }
    times.push_back(t);
    for (std::size_t c = 0; c < kChannelCount; ++c) values.push_back(parse_double(fields[c + 1], line_no));
    const int marker = parse_int(fields[kChannelCount + 1], line_no);
    const std::size_t sample = times.size() - 1;
    switch (marker) {
      case 0:
        break;
      case 1:
        rec.markers.push_back({sample, MarkerKind::Start});
        break;
      case 2:
        rec.markers.push_back({sample, MarkerKind::End});
        break;
      default:
        fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": marker must be 0, 1 or 2");
    }
  }
  rec.samples = Matrix(times.size(), kChannelCount);
  rec.samples.data() = std::move(values);

  for (std::size_t i = 0; i < rec.markers.size(); ++i) {
    const auto expected = (i % 2 == 0) ? MarkerKind::Start : MarkerKind::End;
    if (rec.markers[i].kind != expected) {
      fail(ErrorCode::Integrity, "markers must alternate start/end (marker " + std::to_string(i) + ")");
    }
  }
  if (rec.markers.size() % 2 != 0) fail(ErrorCode::Integrity, "start marker without matching end");
  if (times.size() >= 2) rec.sample_rate_hz = static_cast<double>(times.size() - 1) / (times.back() - times.front());
  // Timestamps are written with limited precision; snap to the nominal rate when close.
  if (std::abs(rec.sample_rate_hz - kSampleRateHz) < 1e-3 * kSampleRateHz) rec.sample_rate_hz = kSampleRateHz;
  return rec;
}

RawRecording load_recording(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_recording(in);
}

void write_recording(const RawRecording& rec, std::ostream& out) {
  out << kRecordingHeader << '\n';
  std::vector<int> marker_col(rec.samples.rows(), 0);
  for (const auto& m : rec.markers) marker_col.at(m.sample_index) = m.kind == MarkerKind::Start ? 1 : 2;
  char buf[64];
  for (std::size_t i = 0; i < rec.samples.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%.7f", static_cast<double>(i) / rec.sample_rate_hz);
    out << buf;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      std::snprintf(buf, sizeof buf, ",%.8g", rec.samples(i, c));
      out << buf;
    }
    out << ',' << marker_col[i] << '\n';
  }
}

void save_recording(const RawRecording& rec, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_recording(rec, out);
}

void validate_key_pairing(const std::vector<KeyEvent>& events) {
  std::map<std::string, bool> held;
  for (const auto& e : events) {
    bool& down = held[e.key];
    if (e.action == KeyAction::Down) {
      if (down) fail(ErrorCode::Integrity, "key '" + e.key + "' pressed again before release");
      down = true;
    } else {
      if (!down) fail(ErrorCode::Integrity, "key '" + e.key + "' released without prior press");
      down = false;
    }
  }
}

std::vector<KeyEvent> parse_keystrokes(std::istream& in) {
  std::vector<KeyEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("key") || !j.contains("action") || !j.contains("t_ms") ||
        !j["key"].is_string() || !j["action"].is_string() || !j["t_ms"].is_number()) {
      fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": expected {key, action, t_ms}");
    }
    KeyEvent e;
    e.key = j["key"].get<std::string>();
    const auto action = j["action"].get<std::string>();
    if (action == "down") {
      e.action = KeyAction::Down;
    } else if (action == "up") {
      e.action = KeyAction::Up;
    } else {
      fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": unknown action '" + action + "'");
    }
    e.t_ms = j["t_ms"].get<double>();
    events.push_back(std::move(e));
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const KeyEvent& a, const KeyEvent& b) { return a.t_ms < b.t_ms; });
  validate_key_pairing(events);
  return events;
}

std::vector<KeyEvent> load_keystrokes(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_keystrokes(in);
}

void write_keystrokes(const std::vector<KeyEvent>& events, std::ostream& out) {
  for (const auto& e : events) {
    json j;
    j["key"] = e.key;
    j["action"] = e.action == KeyAction::Down ? "down" : "up";
    j["t_ms"] = e.t_ms;
    out << j.dump() << '\n';
  }
}

void save_keystrokes(const std::vector<KeyEvent>& events, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_keystrokes(events, out);
}

void write_feature_matrix(const FeatureMatrix& m, std::ostream& out) {
  std::set<std::string> seen;
  for (const auto& name : m.feature_names) {
    if (!seen.insert(name).second) fail(ErrorCode::Format, "duplicate feature name '" + name + "'");
  }
  if (m.rows.rows() != m.labels.size() || (m.rows.rows() > 0 && m.rows.cols() != m.feature_names.size())) {
    fail(ErrorCode::Format, "feature matrix shape does not match names/labels");
  }
  out << "subject,session,trial";
  for (const auto& name : m.feature_names) out << ',' << name;
  out << '\n';
  if (m.norm_stats) {
    out << kMinRow << ",,";
    for (double v : m.norm_stats->min) out << ',' << format_double(v);
    out << '\n' << kMaxRow << ",,";
    for (double v : m.norm_stats->max) out << ',' << format_double(v);
    out << '\n';
  }
  for (std::size_t i = 0; i < m.rows.rows(); ++i) {
    const auto& l = m.labels[i];
    out << l.subject << ',' << l.session << ',' << l.trial;
    for (double v : m.rows.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_feature_matrix(m, out);
}

FeatureMatrix read_feature_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Format, "empty feature matrix file");
  const auto header = split_csv(trim(line));
  if (header.size() < 3 || header[0] != "subject" || header[1] != "session" || header[2] != "trial") {
    fail(ErrorCode::Format, "feature matrix header must start with subject,session,trial");
  }
  FeatureMatrix m;
  std::set<std::string> seen;
  for (std::size_t i = 3; i < header.size(); ++i) {
    std::string name(header[i]);
    if (!seen.insert(name).second) fail(ErrorCode::Format, "duplicate feature name '" + name + "'");
    m.feature_names.push_back(std::move(name));
  }
  const std::size_t d = m.feature_names.size();
  m.rows = Matrix(0, d);
  std::size_t line_no = 1;
  std::vector<double> values(d);
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto fields = split_csv(row);
    if (fields.size() != d + 3) {
      fail(ErrorCode::Format, "line " + std::to_string(line_no) + ": expected " + std::to_string(d + 3) + " columns");
    }
    for (std::size_t j = 0; j < d; ++j) values[j] = parse_double(fields[j + 3], line_no);
    if (fields[0] == kMinRow || fields[0] == kMaxRow) {
      if (!m.norm_stats) m.norm_stats = NormStats{};
      (fields[0] == kMinRow ? m.norm_stats->min : m.norm_stats->max) = values;
      continue;
    }
    m.labels.push_back({parse_int(fields[0], line_no), parse_int(fields[1], line_no), parse_int(fields[2], line_no)});
    m.rows.append_row(values);
  }
  if (m.norm_stats && (m.norm_stats->min.size() != d || m.norm_stats->max.size() != d)) {
    fail(ErrorCode::Format, "normalization rows incomplete");
  }
  return m;
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_feature_matrix(in);
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  json j;
  j["subjects"] = manifest.subjects;
  j["sessions"] = manifest.sessions;
  j["trials_per_session"] = manifest.trials_per_session;
  j["password_keys"] = manifest.password_keys;
  j["seed"] = manifest.seed;
  j["sample_rate_hz"] = kSampleRateHz;
  j["channels"] = std::vector<std::string>(kChannelNames.begin(), kChannelNames.end());
  return j.dump(2);
}

DatasetManifest manifest_from_json(std::string_view text) {
  DatasetManifest m;
  try {
    const auto j = json::parse(text);
    m.subjects = j.at("subjects").get<int>();
    m.sessions = j.at("sessions").get<int>();
    m.trials_per_session = j.at("trials_per_session").get<int>();
    m.password_keys = j.at("password_keys").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, std::string("manifest: ") + e.what());
  }
  if (m.password_keys.size() != kPasswordLength) {
    fail(ErrorCode::Format, "manifest: password_keys must have 12 entries");
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& dataset_dir) {
  auto in = open_in(dataset_dir / "manifest.json");
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str());
}

std::filesystem::path trial_stem(const std::filesystem::path& dataset_dir, const TrialLabel& label) {
  return dataset_dir / ("subject_" + std::to_string(label.subject)) / ("session_" + std::to_string(label.session)) /
         ("trial_" + std::to_string(label.trial));
}

}  // namespace dataio
}  // namespace biokey
