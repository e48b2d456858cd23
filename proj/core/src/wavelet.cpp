#include "biokey/wavelet.hpp"

#include <algorithm>
#include <functional>

#include "biokey/error.hpp"

namespace biokey::wavelet {

const std::array<double, 16>& db8_lowpass() {
  static const std::array<double, 16> h = {
      5.44158422431040081357e-02,  3.12871590914299946284e-01,  6.75630736297289757886e-01,
      5.85354683654206731092e-01,  -1.58291052563493059302e-02, -2.84015542961546907375e-01,
      4.72484573913282794588e-04,  1.28747426620478472303e-01,  -1.73693010018075473522e-02,
      -4.40882539307947546314e-02, 1.39810279173982823786e-02,  8.74609404740577661697e-03,
      -4.87035299345157414452e-03, -3.91740373376947049761e-04, 6.75449406450569331435e-04,
      -1.17476784124769534768e-04,
  };
  return h;
}

std::array<double, 16> db8_highpass() {
  const auto& h = db8_lowpass();
  std::array<double, 16> g{};
  for (std::size_t n = 0; n < h.size(); ++n) g[n] = ((n % 2 == 0) ? 1.0 : -1.0) * h[h.size() - 1 - n];
  return g;
}

Split analyze(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2 || n % 2 != 0) fail(ErrorCode::Parameter, "wavelet analysis needs an even-length input");
  const auto& h = db8_lowpass();
  const auto g = db8_highpass();
  Split out{std::vector<double>(n / 2), std::vector<double>(n / 2)};
  for (std::size_t k = 0; k < n / 2; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (std::size_t t = 0; t < h.size(); ++t) {
      const double v = x[(2 * k + t) % n];
      a += h[t] * v;
      d += g[t] * v;
    }
    out.approx[k] = a;
    out.detail[k] = d;
  }
  return out;
}

std::vector<Band> packet_bands18(std::span<const double> x, double fs) {
  std::vector<Band> bands;
  // `flipped` tracks the spectral inversion introduced by decimating a
  // high-pass branch; it decides which child covers the lower half.
  std::function<void(std::vector<double>, double, double, bool, int)> descend =
      [&](std::vector<double> coeffs, double lo, double hi, bool flipped, int depth) {
        const bool split_again = depth == 4 && hi <= 8.0 * fs / 128.0;
        if (depth == 5 || (depth == 4 && !split_again)) {
          bands.push_back({"", lo, hi, std::move(coeffs)});
          return;
        }
        auto s = analyze(coeffs);
        const double mid = 0.5 * (lo + hi);
        if (!flipped) {
          descend(std::move(s.approx), lo, mid, false, depth + 1);
          descend(std::move(s.detail), mid, hi, true, depth + 1);
        } else {
          descend(std::move(s.detail), lo, mid, false, depth + 1);
          descend(std::move(s.approx), mid, hi, true, depth + 1);
        }
      };
  descend(std::vector<double>(x.begin(), x.end()), 0.0, fs / 2.0, false, 0);
  std::sort(bands.begin(), bands.end(), [](const Band& a, const Band& b) { return a.lo_hz < b.lo_hz; });
  for (std::size_t i = 0; i < bands.size(); ++i) bands[i].name = "W" + std::to_string(i + 1);
  return bands;
}

std::vector<Band> dwt_bands(std::span<const double> x, double fs, int levels) {
  std::vector<Band> details;
  std::vector<double> approx(x.begin(), x.end());
  double hi = fs / 2.0;
  for (int level = 1; level <= levels; ++level) {
    auto s = analyze(approx);
    details.push_back({"cD" + std::to_string(level), hi / 2.0, hi, std::move(s.detail)});
    approx = std::move(s.approx);
    hi /= 2.0;
  }
  std::vector<Band> out;
  out.push_back({"cA" + std::to_string(levels), 0.0, hi, std::move(approx)});
  for (auto it = details.rbegin(); it != details.rend(); ++it) out.push_back(std::move(*it));
  return out;
}

}  // namespace biokey::wavelet
