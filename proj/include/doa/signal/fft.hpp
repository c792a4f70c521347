#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace doa::signal {

// Thin wrappers over FFTW. Plans are cached per size; execution is
// reentrant, so these may be called from several threads.

/// Real-to-complex DFT: out.size() must be in.size()/2 + 1.
void rfft(std::span<const double> in, std::span<std::complex<double>> out);

/// Complex-to-real inverse DFT of length n, normalised by 1/n.
void irfft(std::span<const std::complex<double>> in, std::span<double> out);

/// Full linear convolution (length a + b - 1), computed with FFTs.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

std::size_t next_pow2(std::size_t n) noexcept;

}  // namespace doa::signal
