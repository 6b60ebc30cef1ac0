#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "rde/core.hpp"

namespace rde {

/// Standard complex DFT (radix-2 FFT for power-of-two lengths, direct sum
/// otherwise). Forward: X_k = sum_l x_l e^{-i 2 pi l k / n}; inverse
/// includes the 1/n factor.
std::vector<std::complex<double>> dft_complex(const std::vector<std::complex<double>>& in,
                                              bool inverse);

/// Per-frequency polar coefficients of a 1D real signal: k = n blocks of
/// (magnitude, phase) with phase in [0, 2 pi) and phase 0 at zero magnitude.
CoefficientVector dft_forward(const Signal& x);

/// Real part of the inverse transform of (magnitude, phase) blocks. When
/// `imag_residual` is non-null it receives the largest imaginary magnitude
/// discarded by taking the real part.
Signal dft_inverse(const CoefficientVector& h, double* imag_residual = nullptr);

/// Representation with one (magnitude, phase) block per frequency (d_j = 2).
std::unique_ptr<RepresentationSystem> make_fourier_per_frequency(std::size_t n);

/// Representation with two blocks: the full magnitude spectrum (d_1 = n)
/// and the full phase spectrum (d_2 = n).
std::unique_ptr<RepresentationSystem> make_fourier_split(std::size_t n);

}  // namespace rde
