#pragma once

#include <complex>
#include <span>
#include <vector>

namespace biokey::fft {

/// In-place complex DFT. Radix-2 for power-of-two sizes, direct O(n^2)
/// evaluation otherwise. `inverse` applies the 1/n scale.
void transform(std::vector<std::complex<double>>& data, bool inverse = false);

/// DFT of a real signal, returning bins 0..n/2.
std::vector<std::complex<double>> real_forward(std::span<const double> x);

/// Inverse of real_forward for an output of length n (n even).
std::vector<double> real_inverse(std::span<const std::complex<double>> half_spectrum, std::size_t n);

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace biokey::fft
