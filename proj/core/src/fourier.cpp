#include "rde/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rde {

namespace {

using cplx = std::complex<double>;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const cplx wl(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const cplx u = a[i + j];
        const cplx v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

std::vector<cplx> dft_direct(const std::vector<cplx>& in, bool inverse) {
  const std::size_t n = in.size();
  std::vector<cplx> out(n, cplx(0.0, 0.0));
  const double sign = inverse ? 2.0 : -2.0;
  for (std::size_t k = 0; k < n; ++k) {
    cplx sum(0.0, 0.0);
    for (std::size_t l = 0; l < n; ++l) {
      const double angle = sign * M_PI * static_cast<double>(l) * static_cast<double>(k) /
                           static_cast<double>(n);
      sum += in[l] * cplx(std::cos(angle), std::sin(angle));
    }
    out[k] = sum;
  }
  return out;
}

// Unit phasor e^{i 2 pi b / n}.
cplx bin_phase(std::size_t b, std::size_t n) {
  const double angle = 2.0 * M_PI * static_cast<double>(b) / static_cast<double>(n);
  return cplx(std::cos(angle), std::sin(angle));
}

double wrap_phase(double w) {
  const double two_pi = 2.0 * M_PI;
  w = std::fmod(w, two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w = 0.0;
  return w;
}

struct PolarSpectrum {
  std::vector<double> mag;
  std::vector<double> phase;
};

PolarSpectrum forward_polar(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<cplx> buf(n);
  for (std::size_t l = 0; l < n; ++l) buf[l] = cplx(x[l], 0.0);
  std::vector<cplx> f = dft_complex(buf, false);
  PolarSpectrum p;
  p.mag.resize(n);
  p.phase.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    const cplx c = f[b] * std::conj(bin_phase(b, n));
    const double m = std::abs(c);
    p.mag[b] = m;
    p.phase[b] = m == 0.0 ? 0.0 : wrap_phase(std::atan2(c.imag(), c.real()));
  }
  return p;
}

std::vector<double> inverse_real(std::span<const double> mag, std::span<const double> phase,
                                 double* imag_residual) {
  const std::size_t n = mag.size();
  std::vector<cplx> buf(n);
  for (std::size_t b = 0; b < n; ++b) {
    // m may be negative for mixed/perturbed coefficients; m e^{iw} stays valid.
    const cplx c(mag[b] * std::cos(phase[b]), mag[b] * std::sin(phase[b]));
    buf[b] = c * bin_phase(b, n);
  }
  std::vector<cplx> out = dft_complex(buf, true);
  std::vector<double> x(n);
  double residual = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    x[l] = out[l].real();
    residual = std::max(residual, std::abs(out[l].imag()));
  }
  if (imag_residual) *imag_residual = residual;
  return x;
}

// VJP shared by both Fourier representations. Returns per-bin gradients
// (d/d mag, d/d phase) given a signal cotangent.
PolarSpectrum polar_vjp(std::span<const double> mag, std::span<const double> phase,
                        std::span<const double> cot) {
  const std::size_t n = mag.size();
  std::vector<cplx> buf(n);
  for (std::size_t l = 0; l < n; ++l) buf[l] = cplx(cot[l], 0.0);
  std::vector<cplx> f = dft_complex(buf, false);
  PolarSpectrum g;
  g.mag.resize(n);
  g.phase.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t b = 0; b < n; ++b) {
    // C_b = sum_l cot_l e^{i 2 pi (l+1) b / n} = e^{i 2 pi b / n} conj(F_b) for real cot.
    const cplx c = bin_phase(b, n) * std::conj(f[b]);
    const cplx rotated = std::polar(1.0, phase[b]) * c;
    g.mag[b] = rotated.real() * inv_n;
    g.phase[b] = -mag[b] * rotated.imag() * inv_n;
  }
  return g;
}

class FourierPerFrequencyRep final : public RepresentationSystem {
public:
  explicit FourierPerFrequencyRep(std::size_t n) : n_(n) {
    if (n_ == 0) fail("make_fourier_per_frequency: n must be >= 1");
    dims_.assign(n_, 2);
    info_.resize(n_);
    for (std::size_t b = 0; b < n_; ++b) {
      info_[b].kind = "frequency";
      info_[b].frequency = b;
      info_[b].index = b;
    }
  }

  Shape signal_shape() const override { return Shape::vector(n_); }
  std::size_t block_count() const override { return n_; }
  const std::vector<std::size_t>& block_dims() const override { return dims_; }
  const std::vector<BlockInfo>& block_info() const override { return info_; }

  Signal synthesize(const CoefficientVector& h) const override {
    require_structure(h, "fourier synthesize");
    std::vector<double> mag(n_), phase(n_);
    split(h, mag, phase);
    return Signal(inverse_real(mag, phase, nullptr), Shape::vector(n_));
  }

  CoefficientVector analyze(const Signal& x) const override {
    if (x.size() != n_) fail("fourier analyze: length mismatch");
    const PolarSpectrum p = forward_polar(x.values());
    std::vector<double> values(2 * n_);
    for (std::size_t b = 0; b < n_; ++b) {
      values[2 * b] = p.mag[b];
      values[2 * b + 1] = p.phase[b];
    }
    return CoefficientVector(std::move(values), dims_);
  }

  CoefficientVector synthesize_vjp(const CoefficientVector& h,
                                   std::span<const double> cot) const override {
    std::vector<double> mag(n_), phase(n_);
    split(h, mag, phase);
    const PolarSpectrum g = polar_vjp(mag, phase, cot);
    std::vector<double> values(2 * n_);
    for (std::size_t b = 0; b < n_; ++b) {
      values[2 * b] = g.mag[b];
      values[2 * b + 1] = g.phase[b];
    }
    return CoefficientVector(std::move(values), dims_);
  }

private:
  void split(const CoefficientVector& h, std::vector<double>& mag,
             std::vector<double>& phase) const {
    for (std::size_t b = 0; b < n_; ++b) {
      mag[b] = h.values()[2 * b];
      phase[b] = h.values()[2 * b + 1];
    }
  }

  std::size_t n_;
  std::vector<std::size_t> dims_;
  std::vector<BlockInfo> info_;
};

class FourierSplitRep final : public RepresentationSystem {
public:
  explicit FourierSplitRep(std::size_t n) : n_(n) {
    if (n_ == 0) fail("make_fourier_split: n must be >= 1");
    dims_ = {n_, n_};
    info_.resize(2);
    info_[0].kind = "magnitude";
    info_[1].kind = "phase";
  }

  Shape signal_shape() const override { return Shape::vector(n_); }
  std::size_t block_count() const override { return 2; }
  const std::vector<std::size_t>& block_dims() const override { return dims_; }
  const std::vector<BlockInfo>& block_info() const override { return info_; }

  Signal synthesize(const CoefficientVector& h) const override {
    require_structure(h, "fourier split synthesize");
    return Signal(inverse_real(h.block(0), h.block(1), nullptr), Shape::vector(n_));
  }

  CoefficientVector analyze(const Signal& x) const override {
    if (x.size() != n_) fail("fourier split analyze: length mismatch");
    PolarSpectrum p = forward_polar(x.values());
    std::vector<double> values;
    values.reserve(2 * n_);
    values.insert(values.end(), p.mag.begin(), p.mag.end());
    values.insert(values.end(), p.phase.begin(), p.phase.end());
    return CoefficientVector(std::move(values), dims_);
  }

  CoefficientVector synthesize_vjp(const CoefficientVector& h,
                                   std::span<const double> cot) const override {
    PolarSpectrum g = polar_vjp(h.block(0), h.block(1), cot);
    std::vector<double> values;
    values.reserve(2 * n_);
    values.insert(values.end(), g.mag.begin(), g.mag.end());
    values.insert(values.end(), g.phase.begin(), g.phase.end());
    return CoefficientVector(std::move(values), dims_);
  }

private:
  std::size_t n_;
  std::vector<std::size_t> dims_;
  std::vector<BlockInfo> info_;
};

}  // namespace

std::vector<cplx> dft_complex(const std::vector<cplx>& in, bool inverse) {
  const std::size_t n = in.size();
  if (n == 0) fail("dft_complex: empty input");
  std::vector<cplx> out;
  if (is_pow2(n)) {
    out = in;
    fft_radix2(out, inverse);
  } else {
    out = dft_direct(in, inverse);
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (cplx& c : out) c *= inv_n;
  }
  return out;
}

CoefficientVector dft_forward(const Signal& x) {
  if (x.size() == 0) fail("dft_forward: empty signal");
  const std::size_t n = x.size();
  const PolarSpectrum p = forward_polar(x.values());
  std::vector<double> values(2 * n);
  for (std::size_t b = 0; b < n; ++b) {
    values[2 * b] = p.mag[b];
    values[2 * b + 1] = p.phase[b];
  }
  return CoefficientVector(std::move(values), std::vector<std::size_t>(n, 2));
}

Signal dft_inverse(const CoefficientVector& h, double* imag_residual) {
  const std::size_t n = h.block_count();
  std::vector<double> mag(n), phase(n);
  for (std::size_t b = 0; b < n; ++b) {
    if (h.block_dim(b) != 2) {
      std::ostringstream os;
      os << "dft_inverse: block " << b << " must have dim 2 (magnitude, phase)";
      fail(os.str());
    }
    mag[b] = h.block(b)[0];
    if (mag[b] < 0.0) {
      std::ostringstream os;
      os << "dft_inverse: negative magnitude at block " << b;
      fail(os.str());
    }
    phase[b] = h.block(b)[1];
  }
  return Signal(inverse_real(mag, phase, imag_residual), Shape::vector(n));
}

std::unique_ptr<RepresentationSystem> make_fourier_per_frequency(std::size_t n) {
  return std::make_unique<FourierPerFrequencyRep>(n);
}

std::unique_ptr<RepresentationSystem> make_fourier_split(std::size_t n) {
  return std::make_unique<FourierSplitRep>(n);
}

}  // namespace rde
