#include "biokey/matcher.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "biokey/error.hpp"

namespace biokey::matcher {

std::string BitTemplate::to_string() const {
  std::string s(bits_, '0');
  for (std::size_t k = 0; k < bits_; ++k)
    if (test(k)) s[k] = '1';
  return s;
}

BitTemplate BitTemplate::from_string(const std::string& bits) {
  BitTemplate t(bits.size());
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (bits[k] != '0' && bits[k] != '1') fail(ErrorCode::Format, "bit string may only contain 0 and 1");
    t.set(k, bits[k] == '1');
  }
  return t;
}

std::string BitTemplate::to_hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s((bits_ + 3) / 4, '0');
  for (std::size_t i = 0; i < s.size(); ++i) {
    unsigned nibble = 0;
    for (std::size_t b = 0; b < 4 && 4 * i + b < bits_; ++b) nibble |= static_cast<unsigned>(test(4 * i + b)) << b;
    s[i] = digits[nibble];
  }
  return s;
}

BitTemplate BitTemplate::from_hex(const std::string& hex, std::size_t bits) {
  if (hex.size() != (bits + 3) / 4) fail(ErrorCode::Format, "hex template has the wrong length");
  BitTemplate t(bits);
  for (std::size_t i = 0; i < hex.size(); ++i) {
    const char c = hex[i];
    unsigned nibble;
    if (c >= '0' && c <= '9') nibble = static_cast<unsigned>(c - '0');
    else if (c >= 'a' && c <= 'f') nibble = static_cast<unsigned>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') nibble = static_cast<unsigned>(c - 'A' + 10);
    else fail(ErrorCode::Format, "invalid hex digit in template");
    for (std::size_t b = 0; b < 4; ++b) {
      const bool on = (nibble >> b) & 1u;
      if (4 * i + b < bits) t.set(4 * i + b, on);
      else if (on) fail(ErrorCode::Format, "hex template sets bits past its length");
    }
  }
  return t;
}

std::size_t hamming(const BitTemplate& a, const BitTemplate& b) {
  if (a.size() != b.size()) fail(ErrorCode::Parameter, "templates differ in length");
  const auto wa = a.words();
  const auto wb = b.words();
  std::size_t d = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) d += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
  return d;
}

std::vector<double> compute_thresholds(const Matrix& gallery) {
  if (gallery.rows() == 0) fail(ErrorCode::Parameter, "empty gallery");
  std::vector<double> t(gallery.cols());
  for (std::size_t c = 0; c < gallery.cols(); ++c) {
    auto col = gallery.column(c);
    std::sort(col.begin(), col.end());
    t[c] = features::percentile(col, 50.0);
  }
  return t;
}

std::vector<double> compute_thresholds(const FeatureMatrix& gallery) { return compute_thresholds(gallery.rows); }

BitTemplate binarize(std::span<const double> v, std::span<const double> thresholds) {
  if (v.size() != thresholds.size()) fail(ErrorCode::Parameter, "feature vector does not match the thresholds");
  BitTemplate t(v.size());
  for (std::size_t k = 0; k < v.size(); ++k)
    if (v[k] >= thresholds[k]) t.set(k);
  return t;
}

std::vector<int> TemplateGallery::subjects() const {
  std::vector<int> s;
  for (const auto& [id, _] : groups) s.push_back(id);
  return s;
}

std::size_t TemplateGallery::template_count() const {
  std::size_t n = 0;
  for (const auto& [_, g] : groups) n += g.size();
  return n;
}

BitTemplate TemplateGallery::binarize(const FeatureVector& v) const {
  if (v.names != feature_names) fail(ErrorCode::Parameter, "feature names do not match the gallery");
  return matcher::binarize(v.values, thresholds);
}

BitTemplate TemplateGallery::binarize(std::span<const double> v) const { return matcher::binarize(v, thresholds); }

TemplateGallery build_gallery(const FeatureMatrix& gallery) {
  if (gallery.size() == 0) fail(ErrorCode::Parameter, "empty gallery");
  TemplateGallery g;
  g.feature_names = gallery.feature_names;
  g.thresholds = compute_thresholds(gallery.rows);
  for (std::size_t r = 0; r < gallery.size(); ++r)
    g.groups[gallery.labels[r].subject].push_back(matcher::binarize(gallery.rows.row(r), g.thresholds));
  return g;
}

TemplateGallery build_gallery(const std::vector<std::string>& names,
                              const std::map<int, std::vector<std::vector<double>>>& rows_by_subject) {
  FeatureMatrix m;
  m.feature_names = names;
  for (const auto& [subject, rows] : rows_by_subject) {
    for (const auto& row : rows) {
      if (row.size() != names.size()) fail(ErrorCode::Parameter, "gallery row does not match the feature names");
      m.rows.append_row(row);
      m.labels.push_back({subject, 0, 0});
    }
  }
  if (m.size() > 0 && m.rows.cols() == 0) m.rows = Matrix(m.size(), 0);
  return build_gallery(m);
}

std::string gallery_to_json(const TemplateGallery& g) {
  nlohmann::ordered_json j;
  j["feature_names"] = g.feature_names;
  j["thresholds"] = g.thresholds;
  auto& subjects = j["subjects"] = nlohmann::ordered_json::object();
  for (const auto& [id, templates] : g.groups) {
    auto& list = subjects[std::to_string(id)] = nlohmann::ordered_json::array();
    for (const auto& t : templates) list.push_back(t.to_hex());
  }
  return j.dump(2) + "\n";
}

TemplateGallery gallery_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("gallery is not valid JSON: ") + e.what());
  }
  TemplateGallery g;
  try {
    g.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    g.thresholds = j.at("thresholds").get<std::vector<double>>();
    if (g.thresholds.size() != g.feature_names.size()) fail(ErrorCode::Format, "threshold count mismatch");
    for (const auto& [id, list] : j.at("subjects").items()) {
      auto& group = g.groups[std::stoi(id)];
      for (const auto& hex : list) group.push_back(BitTemplate::from_hex(hex.get<std::string>(), g.bits()));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("malformed gallery: ") + e.what());
  } catch (const std::invalid_argument&) {
    fail(ErrorCode::Format, "gallery subject ids must be integers");
  }
  return g;
}

std::vector<std::uint32_t> group_distances(const BitTemplate& probe, const TemplateGallery& gallery) {
  std::vector<std::uint32_t> out;
  out.reserve(gallery.groups.size());
  for (const auto& [_, templates] : gallery.groups) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (const auto& t : templates) best = std::min(best, hamming(probe, t));
    out.push_back(static_cast<std::uint32_t>(std::min<std::size_t>(best, probe.size())));
  }
  return out;
}

MatchMatrix match_matrix(const Matrix& probes, const TemplateGallery& gallery) {
  if (probes.rows() > 0 && probes.cols() != gallery.bits())
    fail(ErrorCode::Parameter, "probe width does not match the gallery");
  MatchMatrix m;
  m.subjects = gallery.subjects();
  m.probes = probes.rows();
  m.bits = gallery.bits();
  m.distance.reserve(m.probes * m.subjects.size());
  for (std::size_t p = 0; p < probes.rows(); ++p) {
    const auto d = group_distances(gallery.binarize(probes.row(p)), gallery);
    m.distance.insert(m.distance.end(), d.begin(), d.end());
  }
  return m;
}

MatchMatrix match_matrix(const FeatureMatrix& probes, const TemplateGallery& gallery) {
  if (probes.feature_names != gallery.feature_names)
    fail(ErrorCode::Parameter, "probe features are not aligned with the gallery");
  return match_matrix(probes.rows, gallery);
}

namespace {

std::size_t column_of(const MatchMatrix& m, int subject) {
  auto it = std::lower_bound(m.subjects.begin(), m.subjects.end(), subject);
  if (it == m.subjects.end() || *it != subject)
    fail(ErrorCode::OpenSet, "probe subject " + std::to_string(subject) + " is not in the gallery");
  return static_cast<std::size_t>(it - m.subjects.begin());
}

}  // namespace

std::vector<double> cmc_from_ranks(std::span<const std::size_t> ranks, std::size_t n_subjects) {
  std::vector<double> curve(n_subjects, 0.0);
  if (ranks.empty()) return curve;
  std::vector<std::size_t> hist(n_subjects + 1, 0);
  for (auto r : ranks) {
    if (r < 1 || r > n_subjects) fail(ErrorCode::Parameter, "rank out of range");
    ++hist[r];
  }
  std::size_t cum = 0;
  for (std::size_t n = 1; n <= n_subjects; ++n) {
    cum += hist[n];
    curve[n - 1] = static_cast<double>(cum) / static_cast<double>(ranks.size());
  }
  return curve;
}

CmcResult cmc(const MatchMatrix& m, std::span<const int> probe_truth) {
  if (probe_truth.size() != m.probes) fail(ErrorCode::Parameter, "truth does not match the probes");
  const std::size_t g = m.subjects.size();
  CmcResult out;
  out.ranks.reserve(m.probes);
  for (std::size_t p = 0; p < m.probes; ++p) {
    const auto t = column_of(m, probe_truth[p]);
    const auto dt = m.at(p, t);
    std::size_t rank = 1;
    for (std::size_t j = 0; j < g; ++j) {
      const auto dj = m.at(p, j);
      if (dj < dt || (dj == dt && j < t)) ++rank;
    }
    out.ranks.push_back(rank);
  }
  out.curve = cmc_from_ranks(out.ranks, g);
  return out;
}

std::pair<double, double> ErrorCurve::at(double tau) const {
  if (thresholds.empty()) return {0.0, 0.0};
  if (tau <= thresholds.front()) return {far.front(), frr.front()};
  if (tau >= thresholds.back()) return {far.back(), frr.back()};
  const auto hi = static_cast<std::size_t>(std::upper_bound(thresholds.begin(), thresholds.end(), tau) -
                                           thresholds.begin());
  const auto lo = hi - 1;
  const double a = (tau - thresholds[lo]) / (thresholds[hi] - thresholds[lo]);
  return {far[lo] + a * (far[hi] - far[lo]), frr[lo] + a * (frr[hi] - frr[lo])};
}

namespace {

double cross(std::pair<double, double> o, std::pair<double, double> a, std::pair<double, double> b) {
  return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
}

double hull_eer(const std::vector<double>& far, const std::vector<double>& frr) {
  std::vector<std::pair<double, double>> pts;
  pts.emplace_back(0.0, 1.0);
  for (std::size_t i = 0; i < far.size(); ++i) pts.emplace_back(far[i], frr[i]);
  pts.emplace_back(1.0, 0.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0.0) hull.pop_back();
    hull.push_back(p);
  }
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    const auto [x0, y0] = hull[i];
    const auto [x1, y1] = hull[i + 1];
    const double d0 = x0 - y0;
    const double d1 = x1 - y1;
    if (d0 <= 0.0 && d1 >= 0.0) {
      if (d0 == d1) return x0;
      const double a = -d0 / (d1 - d0);
      return x0 + a * (x1 - x0);
    }
  }
  return 0.5;
}

}  // namespace

ErrorCurve far_frr_eer(std::span<const double> genuine, std::span<const double> imposter) {
  if (genuine.empty() || imposter.empty()) fail(ErrorCode::Parameter, "need genuine and imposter distances");
  std::vector<double> g(genuine.begin(), genuine.end());
  std::vector<double> im(imposter.begin(), imposter.end());
  for (double v : g)
    if (!std::isfinite(v)) fail(ErrorCode::Validation, "non-finite distance");
  for (double v : im)
    if (!std::isfinite(v)) fail(ErrorCode::Validation, "non-finite distance");
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());

  std::vector<double> uniq(g);
  uniq.insert(uniq.end(), im.begin(), im.end());
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  ErrorCurve c;
  c.n_genuine = g.size();
  c.n_imposter = im.size();
  // A leading threshold below every distance anchors the curve at FAR = 0, FRR = 1.
  const double gap = uniq.size() > 1 ? uniq[1] - uniq[0] : 1.0;
  c.thresholds.push_back(uniq[0] - 0.5 * gap);
  for (std::size_t i = 0; i < uniq.size(); ++i) {
    if (i > 0) c.thresholds.push_back(0.5 * (uniq[i - 1] + uniq[i]));
    c.thresholds.push_back(uniq[i]);
  }
  for (double tau : c.thresholds) {
    const auto acc_imp = static_cast<double>(std::upper_bound(im.begin(), im.end(), tau) - im.begin());
    const auto acc_gen = static_cast<double>(std::upper_bound(g.begin(), g.end(), tau) - g.begin());
    c.far.push_back(acc_imp / static_cast<double>(im.size()));
    c.frr.push_back(1.0 - acc_gen / static_cast<double>(g.size()));
  }

  // FAR - FRR runs from -1 to +1, so a sign change always exists.
  for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
    const double d = c.far[i] - c.frr[i];
    if (d < 0.0) continue;
    if (d == 0.0 || i == 0) {
      c.eer = 0.5 * (c.far[i] + c.frr[i]);
      c.eer_threshold = c.thresholds[i];
    } else {
      const double d0 = c.far[i - 1] - c.frr[i - 1];
      const double a = -d0 / (d - d0);
      c.eer = c.far[i - 1] + a * (c.far[i] - c.far[i - 1]);
      c.eer_threshold = c.thresholds[i - 1] + a * (c.thresholds[i] - c.thresholds[i - 1]);
    }
    break;
  }
  c.eer_hull = hull_eer(c.far, c.frr);
  return c;
}

VerificationScores verification_scores(const MatchMatrix& m, std::span<const int> probe_truth) {
  if (probe_truth.size() != m.probes) fail(ErrorCode::Parameter, "truth does not match the probes");
  VerificationScores s;
  const double bits = static_cast<double>(std::max<std::size_t>(m.bits, 1));
  for (std::size_t p = 0; p < m.probes; ++p) {
    const auto t = column_of(m, probe_truth[p]);
    for (std::size_t j = 0; j < m.subjects.size(); ++j) {
      (j == t ? s.genuine : s.imposter).push_back(m.at(p, j) / bits);
    }
  }
  return s;
}

VerificationScores verification_scores(const MatchMatrix& m, std::span<const int> probe_truth, int subject) {
  if (probe_truth.size() != m.probes) fail(ErrorCode::Parameter, "truth does not match the probes");
  const auto col = column_of(m, subject);
  VerificationScores s;
  const double bits = static_cast<double>(std::max<std::size_t>(m.bits, 1));
  for (std::size_t p = 0; p < m.probes; ++p) (probe_truth[p] == subject ? s.genuine : s.imposter).push_back(m.at(p, col) / bits);
  return s;
}

AuthDecision authenticate_template(const BitTemplate& probe, const TemplateGallery& gallery, int claimed) {
  if (!gallery.groups.contains(claimed))
    fail(ErrorCode::Parameter, "claimed subject " + std::to_string(claimed) + " is not enrolled");
  if (probe.size() != gallery.bits()) fail(ErrorCode::Parameter, "probe length does not match the gallery");
  AuthDecision d;
  const auto dist = group_distances(probe, gallery);
  const auto subjects = gallery.subjects();
  std::uint32_t other = std::numeric_limits<std::uint32_t>::max();
  bool has_other = false;
  for (std::size_t j = 0; j < subjects.size(); ++j) {
    if (subjects[j] == claimed) {
      d.genuine_distance = dist[j];
    } else {
      other = std::min(other, dist[j]);
      has_other = true;
    }
  }
  d.imposter_distance = has_other ? other : static_cast<std::uint32_t>(gallery.bits());
  d.accept = has_other && d.genuine_distance < d.imposter_distance;
  const double bits = static_cast<double>(std::max<std::size_t>(gallery.bits(), 1));
  d.score = (static_cast<double>(d.imposter_distance) - static_cast<double>(d.genuine_distance)) / bits;
  return d;
}

AuthDecision authenticate_template(const FeatureVector& probe, const TemplateGallery& gallery, int claimed) {
  return authenticate_template(gallery.binarize(probe), gallery, claimed);
}

std::string cmc_to_tsv(const CmcResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "rank\tcmc\n";
  for (std::size_t n = 0; n < r.curve.size(); ++n) os << n + 1 << '\t' << r.curve[n] << '\n';
  return os.str();
}

std::string error_curve_to_tsv(const ErrorCurve& c) {
  std::ostringstream os;
  os.precision(17);
  os << "threshold\tfar\tfrr\n";
  for (std::size_t i = 0; i < c.thresholds.size(); ++i)
    os << c.thresholds[i] << '\t' << c.far[i] << '\t' << c.frr[i] << '\n';
  return os.str();
}

}  // namespace biokey::matcher
