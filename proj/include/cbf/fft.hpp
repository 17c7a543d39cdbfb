#pragma once

#include <complex>
#include <vector>

namespace cbf {

// Thin wrappers over FFTW with a mutex-guarded plan cache keyed by
// (size, direction). Unnormalized transforms, same convention as numpy:
// forward applies e^{-i 2 pi k n / N}.
std::vector<std::complex<double>> fft_forward(const std::vector<std::complex<double>>& in);
std::vector<std::complex<double>> fft_inverse(const std::vector<std::complex<double>>& in);

// Forward transform of a real sequence, returns all N complex bins.
std::vector<std::complex<double>> fft_forward_real(const std::vector<double>& in);

} // namespace cbf
