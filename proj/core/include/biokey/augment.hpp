#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biokey/matrix.hpp"

namespace biokey::augment {

enum class Method { None, Jitter, TimeWarp, Smote, Adasyn };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

inline constexpr double kDefaultSigma = 0.05;
inline constexpr std::size_t kDefaultNeighbors = 5;

/// Adds N(0, (sigma * s_c)^2) noise to channel c, where s_c is the
/// channel's sample standard deviation. `trial` is channels x samples.
Matrix jitter(const Matrix& trial, double sigma, std::uint64_t seed);

struct WarpPlan {
  std::size_t slices = 2;
  std::size_t slice = 0;
  double factor = 1.0;
};

/// Slice count in {2, 3, 4}, one slice chosen uniformly, factor drawn
/// from N(1, sigma) truncated to 1 +- 3 sigma.
WarpPlan plan_time_warp(double sigma, std::uint64_t seed);
/// Stretches the chosen slice by the factor and resamples the warped
/// axis back to the original length; every channel shares one warp.
Matrix apply_time_warp(const Matrix& trial, const WarpPlan& plan);
Matrix time_warp(const Matrix& trial, double sigma, std::uint64_t seed);

/// Splits `total` proportionally to `weights` by the largest-remainder
/// rule (ties to the lower index). The parts sum to `total` exactly.
std::vector<std::size_t> largest_remainder(const std::vector<double>& weights, std::size_t total);

struct SyntheticOrigin {
  std::size_t base = 0;      // row index into the input
  std::size_t neighbor = 0;  // row index into the input
  double u = 0.0;
};

struct Oversampled {
  Matrix x;                // input rows followed by synthetic rows
  std::vector<int> labels;
  std::vector<SyntheticOrigin> origins;  // one per synthetic row
  std::vector<std::size_t> allocation;   // ADASYN: synthetics per minority sample
  std::size_t neighbors_used = 0;
  /// ADASYN with no majority neighbours anywhere fell back to uniform weights.
  bool uniform_fallback = false;
};

/// Generates synthetic minority rows until the minority class has
/// `target_count` rows. Input rows are kept in order.
Oversampled smote(const Matrix& x, const std::vector<int>& labels, int minority, std::size_t target_count,
                  std::size_t k, std::uint64_t seed);
Oversampled adasyn(const Matrix& x, const std::vector<int>& labels, int minority, std::size_t target_count,
                   std::size_t k, std::uint64_t seed);

/// Indices of the k nearest rows of `candidates` to row `query` of `x`
/// (Euclidean; ties to the lower index; `query` itself excluded).
std::vector<std::size_t> nearest(const Matrix& x, std::size_t query, const std::vector<std::size_t>& candidates,
                                 std::size_t k);

}  // namespace biokey::augment
