#include "biokey/fft.hpp"

#include <cmath>
#include <utility>

namespace biokey::fft {

namespace {

void radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        // Twiddles evaluated directly rather than by recurrence to keep error flat in n.
        const std::complex<double> w(std::cos(angle * static_cast<double>(k)), std::sin(angle * static_cast<double>(k)));
        const auto u = a[i + k];
        const auto v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

void direct(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double angle = sign * 2.0 * M_PI * static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += a[t] * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  a = std::move(out);
}

}  // namespace

void transform(std::vector<std::complex<double>>& data, bool inverse) {
  if (data.size() <= 1) return;
  if (is_power_of_two(data.size())) {
    radix2(data, inverse);
  } else {
    direct(data, inverse);
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= scale;
  }
}

std::vector<std::complex<double>> real_forward(std::span<const double> x) {
  std::vector<std::complex<double>> buf(x.begin(), x.end());
  transform(buf, false);
  buf.resize(x.size() / 2 + 1);
  return buf;
}

std::vector<double> real_inverse(std::span<const std::complex<double>> half_spectrum, std::size_t n) {
  std::vector<std::complex<double>> buf(n);
  for (std::size_t k = 0; k < half_spectrum.size() && k < n; ++k) buf[k] = half_spectrum[k];
  for (std::size_t k = 1; k < (n + 1) / 2; ++k) buf[n - k] = std::conj(buf[k]);
  transform(buf, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
  return out;
}

}  // namespace biokey::fft
