#pragma once

#include <memory>
#include <vector>

#include "rde/core.hpp"

namespace rde {

/// Fills every coefficient with a constant.
class ConstantPerturbation final : public PerturbationDistribution {
public:
  explicit ConstantPerturbation(double value) : value_(value) {}
  CoefficientVector sample(const CoefficientVector& h, const Mask& s,
                           RngStream& rng) const override;
  bool deterministic() const override { return true; }

private:
  double value_;
};

CoefficientVector sample_constant(const CoefficientVector& h, double value);

struct GaussianSpec {
  enum class Mode { global, per_scale };
  Mode mode = Mode::global;
};

/// Gaussian noise with pre-defined mean and std (diagonal covariance).
class GaussianPerturbation final : public PerturbationDistribution {
public:
  GaussianPerturbation(double mean, double std);
  CoefficientVector sample(const CoefficientVector& h, const Mask& s,
                           RngStream& rng) const override;

private:
  double mean_;
  double std_;
};

/// Gaussian noise with mean/std taken adaptively from the target's own
/// coefficients: over the whole vector (global) or per wavelet scale
/// (per_scale, requires scale labels from the representation).
class GaussianAdaptive final : public PerturbationDistribution {
public:
  explicit GaussianAdaptive(GaussianSpec::Mode mode, std::vector<int> block_scales = {});
  CoefficientVector sample(const CoefficientVector& h, const Mask& s,
                           RngStream& rng) const override;

  static std::vector<int> scales_from(const RepresentationSystem& rep);

private:
  GaussianSpec::Mode mode_;
  std::vector<int> scales_;
};

/// Same-size convolution with reflect padding.
Signal blur_image(const Signal& x, const std::vector<double>& kernel, std::size_t kernel_side);

/// Blurred target expressed in the given (pixel/patch) representation.
CoefficientVector sample_blur(const Signal& x, const std::vector<double>& kernel,
                              std::size_t kernel_side, const RepresentationSystem& rep);

/// Deterministic blur perturbation; the blurred coefficients are fixed at
/// construction.
class BlurPerturbation final : public PerturbationDistribution {
public:
  BlurPerturbation(const Signal& x, const std::vector<double>& kernel, std::size_t kernel_side,
                   const RepresentationSystem& rep);
  CoefficientVector sample(const CoefficientVector& h, const Mask& s,
                           RngStream& rng) const override;
  bool deterministic() const override { return true; }

private:
  CoefficientVector blurred_;
};

/// Deterministic baseline inpainter behind the learned-inpainter interface.
/// Kept positions (s_i > 0.5) copy h; masked positions are linearly
/// interpolated per coordinate from the nearest kept neighbors (nearest-edge
/// extension at boundaries, falling back to the first block when nothing is
/// kept), plus Gaussian noise with std = noise_scale * std(h).
class BaselineInpainter final : public PerturbationDistribution {
public:
  explicit BaselineInpainter(double noise_scale = 0.05) : noise_scale_(noise_scale) {}
  CoefficientVector sample(const CoefficientVector& h, const Mask& s,
                           RngStream& rng) const override;

private:
  double noise_scale_;
};

CoefficientVector baseline_inpaint(const CoefficientVector& h, const Mask& s, std::uint64_t seed,
                                   double noise_scale = 0.05);

}  // namespace rde
