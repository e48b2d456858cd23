#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "biokey/dataio.hpp"
#include "biokey/features.hpp"

namespace biokey::matcher {

/// Fixed-length bit vector packed 64 bits per word (bit k in word k / 64).
class BitTemplate {
 public:
  BitTemplate() = default;
  explicit BitTemplate(std::size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

  std::size_t size() const { return bits_; }
  bool test(std::size_t k) const { return (words_[k / 64] >> (k % 64)) & 1u; }
  void set(std::size_t k, bool on = true) {
    const auto mask = std::uint64_t{1} << (k % 64);
    words_[k / 64] = on ? (words_[k / 64] | mask) : (words_[k / 64] & ~mask);
  }
  std::span<const std::uint64_t> words() const { return words_; }

  std::string to_string() const;  // '0'/'1' per bit
  static BitTemplate from_string(const std::string& bits);
  std::string to_hex() const;     // bit k is bit (k % 4) of nibble k / 4
  static BitTemplate from_hex(const std::string& hex, std::size_t bits);

  friend bool operator==(const BitTemplate&, const BitTemplate&) = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

std::size_t hamming(const BitTemplate& a, const BitTemplate& b);

/// Per-feature medians of the gallery rows.
std::vector<double> compute_thresholds(const Matrix& gallery);
std::vector<double> compute_thresholds(const FeatureMatrix& gallery);

/// Bit k is set iff v[k] >= thresholds[k].
BitTemplate binarize(std::span<const double> v, std::span<const double> thresholds);

struct TemplateGallery {
  std::vector<std::string> feature_names;
  std::vector<double> thresholds;
  std::map<int, std::vector<BitTemplate>> groups;  // subject -> templates

  std::size_t bits() const { return feature_names.size(); }
  std::vector<int> subjects() const;
  std::size_t template_count() const;
  /// Binarizes a feature vector whose names must match the gallery.
  BitTemplate binarize(const FeatureVector& v) const;
  BitTemplate binarize(std::span<const double> v) const;

  friend bool operator==(const TemplateGallery&, const TemplateGallery&) = default;
};

/// Thresholds from all rows, then one template per row grouped by subject.
TemplateGallery build_gallery(const FeatureMatrix& gallery);
/// Recomputes thresholds and re-binarizes; `rows_by_subject` holds raw rows.
TemplateGallery build_gallery(const std::vector<std::string>& names,
                              const std::map<int, std::vector<std::vector<double>>>& rows_by_subject);

std::string gallery_to_json(const TemplateGallery& g);
TemplateGallery gallery_from_json(const std::string& text);

struct MatchMatrix {
  std::vector<int> subjects;         // column order, ascending
  std::size_t probes = 0;
  std::size_t bits = 0;
  std::vector<std::uint32_t> distance;  // probes x subjects

  std::uint32_t at(std::size_t p, std::size_t g) const { return distance[p * subjects.size() + g]; }
};

/// Minimum distance from a probe to each subject group.
std::vector<std::uint32_t> group_distances(const BitTemplate& probe, const TemplateGallery& gallery);
MatchMatrix match_matrix(const Matrix& probes, const TemplateGallery& gallery);
MatchMatrix match_matrix(const FeatureMatrix& probes, const TemplateGallery& gallery);

struct CmcResult {
  std::vector<double> curve;       // curve[N-1] = CMC(N)
  std::vector<std::size_t> ranks;  // 1-based rank per probe
};

CmcResult cmc(const MatchMatrix& m, std::span<const int> probe_truth);
/// CMC from explicit ranks over `n_subjects` gallery groups.
std::vector<double> cmc_from_ranks(std::span<const std::size_t> ranks, std::size_t n_subjects);

struct ErrorCurve {
  std::vector<double> thresholds;  // ascending accept thresholds
  std::vector<double> far;
  std::vector<double> frr;
  double eer = 0.0;
  double eer_threshold = 0.0;
  /// EER of the convex hull of the (FAR, FRR) operating points.
  double eer_hull = 0.0;
  std::size_t n_genuine = 0;
  std::size_t n_imposter = 0;

  /// FAR and FRR linearly interpolated between candidate thresholds.
  std::pair<double, double> at(double tau) const;
};

/// Standard FAR (accepted imposters) and FRR (rejected genuines) over
/// normalized distances; accept iff distance <= tau.
ErrorCurve far_frr_eer(std::span<const double> genuine, std::span<const double> imposter);

struct VerificationScores {
  std::vector<double> genuine;   // normalized distances
  std::vector<double> imposter;
};

/// Genuine/imposter distances from a match matrix: each probe against its
/// own group (genuine) and every other group (imposter).
VerificationScores verification_scores(const MatchMatrix& m, std::span<const int> probe_truth);
/// The same restricted to claims of one subject.
VerificationScores verification_scores(const MatchMatrix& m, std::span<const int> probe_truth, int subject);

struct AuthDecision {
  bool accept = false;
  std::uint32_t genuine_distance = 0;
  std::uint32_t imposter_distance = 0;  // min over other groups
  /// Normalized margin (imposter - genuine) / bits.
  double score = 0.0;
};

/// Accept iff the claimed group is strictly closer than every other group.
/// With no other groups to compare against the claim is rejected.
AuthDecision authenticate_template(const BitTemplate& probe, const TemplateGallery& gallery, int claimed);
AuthDecision authenticate_template(const FeatureVector& probe, const TemplateGallery& gallery, int claimed);

std::string cmc_to_tsv(const CmcResult& r);
std::string error_curve_to_tsv(const ErrorCurve& c);

}  // namespace biokey::matcher
