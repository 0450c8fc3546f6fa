#pragma once

#include <complex>
#include <vector>

namespace fracwave {

// In-place radix-2 complex FFT; size must be a power of two.
// Forward uses e^{-2pi i jk/n}; inverse applies the 1/n factor.
void fft_pow2(std::vector<std::complex<double>>& a, bool inverse);

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace fracwave
