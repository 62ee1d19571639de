#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ragent::detail {

/// Forward complex DFT (FFTW, sign -1, unnormalized). `in` may be shorter than `out`; it is zero-padded.
void fft_forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);

/// Periodic (DFT-even) Hann window, w[n] = 0.5 (1 - cos(2 pi n / N)); w = {1} for N = 1.
std::vector<double> hann(std::size_t n);

}  // namespace ragent::detail
