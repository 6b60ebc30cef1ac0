#pragma once

#include <memory>
#include <vector>

#include "rde/core.hpp"

namespace rde {

/// Multi-level separable 2D discrete wavelet transform with zero padding.
struct WaveletSpec {
  int order = 1;   // Daubechies order p; p = 1 is Haar
  int levels = 1;  // J
};

/// Daubechies scaling filter of length 2p, normalized to sum sqrt(2).
/// Computed by spectral factorization of the binomial half-band polynomial;
/// orders 1..10 are supported.
std::vector<double> daubechies_filter(int order);

/// Maximum level count for an image: floor(log2(min side)).
int dwt_max_levels(std::size_t height, std::size_t width);

/// One analysis level of a 1D signal with zero padding. The output length
/// per subband is (n-1)/2 + (L-1)/2 + 1; together the two subbands form an
/// isometry, so the adjoint below is an exact inverse.
void dwt_analyze_1d(std::span<const double> x, const std::vector<double>& scaling,
                    std::vector<double>& approx, std::vector<double>& detail);

/// Adjoint of dwt_analyze_1d, reconstructing a length-n signal.
void dwt_synthesize_1d(std::span<const double> approx, std::span<const double> detail,
                       const std::vector<double>& scaling, std::size_t n,
                       std::vector<double>& out);

/// Representation over wavelet coefficients of an image. Blocks hold the
/// channel tuple at one coefficient position and are labeled with scale
/// (1 = finest) and subband; the level-J approximation carries scale J.
std::unique_ptr<RepresentationSystem> make_dwt2d(const Shape& image_shape,
                                                 const WaveletSpec& spec);

CoefficientVector dwt_forward(const Signal& x, const WaveletSpec& spec);

Signal dwt_inverse(const CoefficientVector& h, const WaveletSpec& spec, const Shape& image_shape);

}  // namespace rde
