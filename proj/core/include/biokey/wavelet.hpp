#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace biokey::wavelet {

/// Daubechies order-8 scaling filter (16 taps).
const std::array<double, 16>& db8_lowpass();
std::array<double, 16> db8_highpass();

struct Split {
  std::vector<double> approx;
  std::vector<double> detail;
};

/// One analysis level with periodic extension. Input length must be even.
Split analyze(std::span<const double> x);

/// A frequency band of a decomposition with its coefficients.
struct Band {
  std::string name;
  double lo_hz = 0.0;
  double hi_hz = 0.0;
  std::vector<double> coefficients;
};

/// Packet tree of depth 4 with the two lowest leaves split once more:
/// 18 bands in ascending frequency, W1..W18.
std::vector<Band> packet_bands18(std::span<const double> x, double fs);

/// Six-level DWT: cA6, cD6, ..., cD1.
std::vector<Band> dwt_bands(std::span<const double> x, double fs, int levels = 6);

}  // namespace biokey::wavelet
