#include "rde/core.hpp"

#include <cmath>
#include <sstream>

namespace rde {

void RepresentationSystem::require_structure(const CoefficientVector& h,
                                             std::string_view context) const {
  const auto& dims = block_dims();
  if (h.block_count() != dims.size()) {
    std::ostringstream os;
    os << context << ": expected " << dims.size() << " blocks, got " << h.block_count();
    fail(os.str());
  }
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (h.block_dim(i) != dims[i]) {
      std::ostringstream os;
      os << context << ": block " << i << " has dim " << h.block_dim(i) << ", expected "
         << dims[i];
      fail(os.str());
    }
  }
}

CoefficientVector mix_coefficients(const CoefficientVector& h, const Mask& s,
                                   const CoefficientVector& v) {
  h.require_same_structure(v, "mix_coefficients");
  if (s.size() != h.block_count()) {
    std::ostringstream os;
    os << "mix_coefficients: mask length " << s.size() << " vs " << h.block_count() << " blocks";
    fail(os.str());
  }
  std::vector<double> out(h.total_size());
  const auto& hv = h.values();
  const auto& vv = v.values();
  std::size_t pos = 0;
  for (std::size_t i = 0; i < h.block_count(); ++i) {
    const double si = s[i];
    const double ti = 1.0 - si;
    const std::size_t d = h.block_dim(i);
    for (std::size_t c = 0; c < d; ++c, ++pos) {
      out[pos] = si * hv[pos] + ti * vv[pos];
    }
  }
  return CoefficientVector(std::move(out), h.block_dims());
}

Signal obfuscate(const CoefficientVector& h, const Mask& s, const CoefficientVector& v,
                 const RepresentationSystem& f, std::optional<ClipRange> clip) {
  f.require_structure(h, "obfuscate");
  Signal y = f.synthesize(mix_coefficients(h, s, v));
  if (!clip) return y;
  std::vector<double> values = y.values();
  for (double& val : values) {
    if (val < clip->lo) val = clip->lo;
    if (val > clip->hi) val = clip->hi;
  }
  return Signal(std::move(values), y.shape());
}

DistortionEstimate expected_distortion(const Signal& x, const CoefficientVector& h, const Mask& s,
                                       const PerturbationDistribution& V,
                                       const RepresentationSystem& f, const ModelHandle& model,
                                       const DistortionMeasure& d, int n_samples,
                                       std::uint64_t rng_seed, std::optional<ClipRange> clip) {
  if (n_samples < 1) fail("expected_distortion: n_samples must be >= 1");
  const std::vector<double> ref = model.forward(x);
  if (ref.size() != model.output_dim()) {
    std::ostringstream os;
    os << "expected_distortion: model returned " << ref.size() << " outputs, declared "
       << model.output_dim();
    fail(os.str());
  }

  std::vector<double> draws(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    RngStream rng = RngStream::substream(rng_seed, static_cast<std::uint64_t>(i));
    const CoefficientVector v = V.sample(h, s, rng);
    const Signal y = obfuscate(h, s, v, f, clip);
    const std::vector<double> out = model.forward(y);
    const double value = d.evaluate(ref, out);
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << "expected_distortion: non-finite distortion at sample " << i;
      fail(os.str());
    }
    draws[static_cast<std::size_t>(i)] = value;
  }

  double sum = 0.0;
  for (double value : draws) sum += value;
  const double mean = sum / n_samples;

  double sq = 0.0;
  for (double value : draws) {
    const double delta = value - mean;
    sq += delta * delta;
  }
  const double std_error =
      n_samples > 1 ? std::sqrt(sq / (static_cast<double>(n_samples) *
                                      static_cast<double>(n_samples - 1)))
                    : 0.0;
  return DistortionEstimate{mean, std_error, n_samples};
}

double objective_l1(double distortion_mean, const Mask& s, double lambda) {
  return distortion_mean + lambda * s.sparsity_l1();
}

}  // namespace rde
