#include "rde/obfuscations.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rde {

namespace {

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

Stats population_stats(std::span<const double> values) {
  Stats st;
  if (values.empty()) return st;
  double sum = 0.0;
  for (double v : values) sum += v;
  st.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) {
    const double d = v - st.mean;
    sq += d * d;
  }
  st.std = std::sqrt(sq / static_cast<double>(values.size()));
  return st;
}

std::size_t reflect_index(long i, long n) {
  // Symmetric reflection with edge repeat: -1 -> 0, n -> n-1.
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return static_cast<std::size_t>(i);
}

}  // namespace

CoefficientVector ConstantPerturbation::sample(const CoefficientVector& h, const Mask& s,
                                               RngStream& rng) const {
  (void)s;
  (void)rng;
  return sample_constant(h, value_);
}

CoefficientVector sample_constant(const CoefficientVector& h, double value) {
  return CoefficientVector(std::vector<double>(h.total_size(), value), h.block_dims());
}

GaussianPerturbation::GaussianPerturbation(double mean, double std) : mean_(mean), std_(std) {
  if (std_ < 0.0) fail("GaussianPerturbation: std must be >= 0");
}

CoefficientVector GaussianPerturbation::sample(const CoefficientVector& h, const Mask& s,
                                               RngStream& rng) const {
  (void)s;
  std::vector<double> out(h.total_size());
  for (double& v : out) v = mean_ + std_ * rng.gaussian();
  return CoefficientVector(std::move(out), h.block_dims());
}

GaussianAdaptive::GaussianAdaptive(GaussianSpec::Mode mode, std::vector<int> block_scales)
    : mode_(mode), scales_(std::move(block_scales)) {}

std::vector<int> GaussianAdaptive::scales_from(const RepresentationSystem& rep) {
  std::vector<int> scales;
  scales.reserve(rep.block_count());
  for (const BlockInfo& info : rep.block_info()) scales.push_back(info.scale);
  return scales;
}

CoefficientVector GaussianAdaptive::sample(const CoefficientVector& h, const Mask& s,
                                           RngStream& rng) const {
  (void)s;
  if (h.block_count() == 0 || h.total_size() == 0) fail("sample_gaussian_adaptive: empty target");
  std::vector<double> out(h.total_size());
  if (mode_ == GaussianSpec::Mode::global) {
    const Stats st = population_stats(h.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = st.mean + st.std * rng.gaussian();
    return CoefficientVector(std::move(out), h.block_dims());
  }

  if (scales_.size() != h.block_count()) {
    fail("sample_gaussian_adaptive: per-scale mode requires scale labels for every block");
  }
  int max_scale = 0;
  for (int scale : scales_) {
    if (scale < 1) fail("sample_gaussian_adaptive: block without a scale label");
    max_scale = std::max(max_scale, scale);
  }
  // Group stats over all coordinates of all blocks in each scale.
  std::vector<double> sum(static_cast<std::size_t>(max_scale) + 1, 0.0);
  std::vector<double> count(static_cast<std::size_t>(max_scale) + 1, 0.0);
  for (std::size_t i = 0; i < h.block_count(); ++i) {
    const auto block = h.block(i);
    const auto g = static_cast<std::size_t>(scales_[i]);
    for (double v : block) sum[g] += v;
    count[g] += static_cast<double>(block.size());
  }
  std::vector<double> mean(sum.size(), 0.0);
  for (std::size_t g = 0; g < sum.size(); ++g) {
    if (count[g] > 0.0) mean[g] = sum[g] / count[g];
  }
  std::vector<double> sq(sum.size(), 0.0);
  for (std::size_t i = 0; i < h.block_count(); ++i) {
    const auto block = h.block(i);
    const auto g = static_cast<std::size_t>(scales_[i]);
    for (double v : block) {
      const double d = v - mean[g];
      sq[g] += d * d;
    }
  }
  std::vector<double> sigma(sum.size(), 0.0);
  for (std::size_t g = 0; g < sum.size(); ++g) {
    if (count[g] > 0.0) sigma[g] = std::sqrt(sq[g] / count[g]);
  }
  std::size_t pos = 0;
  for (std::size_t i = 0; i < h.block_count(); ++i) {
    const auto g = static_cast<std::size_t>(scales_[i]);
    for (std::size_t c = 0; c < h.block_dim(i); ++c, ++pos) {
      out[pos] = mean[g] + sigma[g] * rng.gaussian();
    }
  }
  return CoefficientVector(std::move(out), h.block_dims());
}

Signal blur_image(const Signal& x, const std::vector<double>& kernel, std::size_t kernel_side) {
  if (kernel_side % 2 == 0) fail("blur_image: kernel side must be odd");
  if (kernel.size() != kernel_side * kernel_side) fail("blur_image: kernel size mismatch");
  double sum = 0.0;
  for (double k : kernel) sum += k;
  if (std::abs(sum - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "blur_image: kernel entries sum to " << sum << ", expected 1";
    fail(os.str());
  }
  const Shape& shape = x.shape();
  if (shape.is_composite() || shape.dims.size() < 2) fail("blur_image: requires an image signal");
  const long h = static_cast<long>(shape.height());
  const long w = static_cast<long>(shape.width());
  const std::size_t channels = shape.channels();
  const std::size_t plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  const long r = static_cast<long>(kernel_side) / 2;

  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < channels; ++c) {
    const double* in = x.values().data() + c * plane;
    double* dst = out.data() + c * plane;
    for (long y = 0; y < h; ++y) {
      for (long xx = 0; xx < w; ++xx) {
        double acc = 0.0;
        for (long ky = 0; ky < static_cast<long>(kernel_side); ++ky) {
          const std::size_t sy = reflect_index(y + ky - r, h);
          for (long kx = 0; kx < static_cast<long>(kernel_side); ++kx) {
            const std::size_t sx = reflect_index(xx + kx - r, w);
            acc += kernel[static_cast<std::size_t>(ky) * kernel_side +
                          static_cast<std::size_t>(kx)] *
                   in[sy * static_cast<std::size_t>(w) + sx];
          }
        }
        dst[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
            static_cast<std::size_t>(xx)] = acc;
      }
    }
  }
  return Signal(std::move(out), shape);
}

CoefficientVector sample_blur(const Signal& x, const std::vector<double>& kernel,
                              std::size_t kernel_side, const RepresentationSystem& rep) {
  return rep.analyze(blur_image(x, kernel, kernel_side));
}

BlurPerturbation::BlurPerturbation(const Signal& x, const std::vector<double>& kernel,
                                   std::size_t kernel_side, const RepresentationSystem& rep)
    : blurred_(sample_blur(x, kernel, kernel_side, rep)) {}

CoefficientVector BlurPerturbation::sample(const CoefficientVector& h, const Mask& s,
                                           RngStream& rng) const {
  (void)s;
  (void)rng;
  h.require_same_structure(blurred_, "sample_blur");
  return blurred_;
}

CoefficientVector BaselineInpainter::sample(const CoefficientVector& h, const Mask& s,
                                            RngStream& rng) const {
  if (s.size() != h.block_count()) fail("baseline_inpaint: mask length mismatch");
  const std::size_t k = h.block_count();
  const std::size_t d = h.block_dim(0);
  for (std::size_t i = 0; i < k; ++i) {
    if (h.block_dim(i) != d) fail("baseline_inpaint: requires uniform block dims");
  }

  std::vector<bool> kept(k);
  bool any_kept = false;
  for (std::size_t i = 0; i < k; ++i) {
    kept[i] = s[i] > 0.5;
    any_kept = any_kept || kept[i];
  }

  std::vector<long> prev_kept(k, -1), next_kept(k, -1);
  long last = -1;
  for (std::size_t i = 0; i < k; ++i) {
    if (kept[i]) last = static_cast<long>(i);
    prev_kept[i] = last;
  }
  last = -1;
  for (std::size_t i = k; i-- > 0;) {
    if (kept[i]) last = static_cast<long>(i);
    next_kept[i] = last;
  }

  std::vector<double> out(h.total_size());
  // Interpolate each coordinate dimension along the 1D block order.
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      if (kept[i]) {
        out[i * d + c] = h.block(i)[c];
        continue;
      }
      if (!any_kept) {
        out[i * d + c] = h.block(0)[c];
        continue;
      }
      const long lo = prev_kept[i];
      const long hi = next_kept[i];
      if (lo < 0) {
        out[i * d + c] = h.block(static_cast<std::size_t>(hi))[c];
      } else if (hi < 0) {
        out[i * d + c] = h.block(static_cast<std::size_t>(lo))[c];
      } else {
        const double left = h.block(static_cast<std::size_t>(lo))[c];
        const double right = h.block(static_cast<std::size_t>(hi))[c];
        const double t = static_cast<double>(static_cast<long>(i) - lo) /
                         static_cast<double>(hi - lo);
        out[i * d + c] = left + (right - left) * t;
      }
    }
  }

  if (noise_scale_ > 0.0) {
    const Stats st = population_stats(h.values());
    const double sigma = noise_scale_ * st.std;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        const double noise = sigma * rng.gaussian();
        if (!kept[i]) out[i * d + c] += noise;
      }
    }
  }
  return CoefficientVector(std::move(out), h.block_dims());
}

CoefficientVector baseline_inpaint(const CoefficientVector& h, const Mask& s, std::uint64_t seed,
                                   double noise_scale) {
  RngStream rng = RngStream::substream(seed, 0);
  return BaselineInpainter(noise_scale).sample(h, s, rng);
}

}  // namespace rde
