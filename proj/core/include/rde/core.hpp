#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rde/rng.hpp"
#include "rde/types.hpp"

namespace rde {

/// Forward evaluation plus input-space gradients of a differentiable model
/// Phi : R^n -> R^m. Implementations must be deterministic and reentrant.
class ModelHandle {
public:
  virtual ~ModelHandle() = default;

  virtual std::size_t output_dim() const = 0;
  virtual std::vector<double> forward(const Signal& x) const = 0;

  /// Transpose-Jacobian product J^T * cotangent; result length x.size().
  virtual std::vector<double> input_gradient(const Signal& x,
                                             std::span<const double> cotangent) const = 0;
};

enum class Subband { none, approx, horizontal, vertical, diagonal };

/// Per-block metadata attached by representation systems: wavelet scale
/// (1 = finest), subband, frequency bin, or a structural kind such as
/// "building" / "measurement" with a position payload.
struct BlockInfo {
  int scale = 0;
  Subband subband = Subband::none;
  std::size_t frequency = 0;
  std::string kind;
  std::size_t index = 0;
};

/// A data representation x = f(h_1, ..., h_k): synthesis from block
/// coefficients to a signal, and (for built-ins) the analysis inverse.
class RepresentationSystem {
public:
  virtual ~RepresentationSystem() = default;

  virtual Shape signal_shape() const = 0;
  virtual std::size_t block_count() const = 0;
  virtual const std::vector<std::size_t>& block_dims() const = 0;
  virtual const std::vector<BlockInfo>& block_info() const = 0;

  virtual Signal synthesize(const CoefficientVector& h) const = 0;

  virtual bool has_analysis() const { return true; }
  virtual CoefficientVector analyze(const Signal& x) const = 0;

  /// Transpose-Jacobian of synthesize at h applied to a signal cotangent;
  /// result has the block structure of h. For linear f this is the adjoint
  /// and does not depend on h.
  virtual CoefficientVector synthesize_vjp(const CoefficientVector& h,
                                           std::span<const double> signal_cotangent) const = 0;

  /// Throws unless h matches this system's block structure.
  void require_structure(const CoefficientVector& h, std::string_view context) const;
};

/// Perturbation distribution V_s over coefficient space. Sampling receives
/// the target coefficients, the current mask (distributions may condition
/// on it), and a dedicated random substream.
class PerturbationDistribution {
public:
  virtual ~PerturbationDistribution() = default;

  virtual CoefficientVector sample(const CoefficientVector& h, const Mask& s,
                                   RngStream& rng) const = 0;

  /// True when sampling ignores the random stream entirely.
  virtual bool deterministic() const { return false; }
};

/// Measure of distortion d(Phi(x), Phi(y)) between two model outputs.
class DistortionMeasure {
public:
  virtual ~DistortionMeasure() = default;

  virtual double evaluate(std::span<const double> reference,
                          std::span<const double> perturbed) const = 0;

  /// Gradient of evaluate with respect to the perturbed output.
  virtual std::vector<double> gradient_wrt_perturbed(std::span<const double> reference,
                                                     std::span<const double> perturbed) const = 0;
};

/// Blockwise mix s (.) h + (1 - s) (.) v with per-block scalar mask values.
CoefficientVector mix_coefficients(const CoefficientVector& h, const Mask& s,
                                   const CoefficientVector& v);

/// Obfuscation f(s (.) h + (1 - s) (.) v), optionally clipped.
Signal obfuscate(const CoefficientVector& h, const Mask& s, const CoefficientVector& v,
                 const RepresentationSystem& f, std::optional<ClipRange> clip = std::nullopt);

/// Monte-Carlo estimate of the expected distortion of x under mask s.
/// Sample i uses RngStream::substream(rng_seed, i), so the estimate is
/// deterministic and independent of evaluation order.
DistortionEstimate expected_distortion(const Signal& x, const CoefficientVector& h, const Mask& s,
                                       const PerturbationDistribution& V,
                                       const RepresentationSystem& f, const ModelHandle& model,
                                       const DistortionMeasure& d, int n_samples,
                                       std::uint64_t rng_seed,
                                       std::optional<ClipRange> clip = std::nullopt);

/// distortion_mean + lambda * ||s||_1.
double objective_l1(double distortion_mean, const Mask& s, double lambda);

}  // namespace rde
