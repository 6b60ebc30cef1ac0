#include "rde/wavelet.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <sstream>

namespace rde {

namespace {

using cplx = std::complex<double>;

// Roots of a monic-normalized real polynomial via Durand-Kerner.
std::vector<cplx> polynomial_roots(std::vector<double> coeffs) {
  const std::size_t degree = coeffs.size() - 1;
  std::vector<cplx> roots(degree);
  if (degree == 0) return roots;
  const double lead = coeffs.back();
  std::vector<cplx> c(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) c[i] = cplx(coeffs[i] / lead, 0.0);

  const cplx base(0.4, 0.9);
  cplx guess(1.0, 0.0);
  for (std::size_t i = 0; i < degree; ++i) {
    guess *= base;
    roots[i] = guess;
  }
  auto eval = [&](cplx z) {
    cplx acc(0.0, 0.0);
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * z + c[i];
    return acc;
  };
  for (int iter = 0; iter < 500; ++iter) {
    double shift = 0.0;
    for (std::size_t i = 0; i < degree; ++i) {
      cplx denom(1.0, 0.0);
      for (std::size_t j = 0; j < degree; ++j) {
        if (j != i) denom *= roots[i] - roots[j];
      }
      const cplx delta = eval(roots[i]) / denom;
      roots[i] -= delta;
      shift = std::max(shift, std::abs(delta));
    }
    if (shift < 1e-15) break;
  }
  return roots;
}

void check_orthonormal(const std::vector<double>& g) {
  const std::size_t len = g.size();
  for (std::size_t shift = 0; 2 * shift < len; ++shift) {
    double dot = 0.0;
    for (std::size_t i = 0; i + 2 * shift < len; ++i) dot += g[i] * g[i + 2 * shift];
    const double expect = shift == 0 ? 1.0 : 0.0;
    if (std::abs(dot - expect) > 1e-12) {
      std::ostringstream os;
      os << "daubechies_filter: orthonormality residual " << std::abs(dot - expect)
         << " at shift " << shift;
      fail(os.str());
    }
  }
}

struct Filters {
  std::vector<double> g;  // scaling
  std::vector<double> w;  // wavelet (quadrature mirror)
  std::size_t len = 0;
  // Coefficient window k covers samples [2k, 2k + len - 1].
  long k_min = 0;
};

Filters make_filters(int order) {
  Filters f;
  f.g = daubechies_filter(order);
  f.len = f.g.size();
  f.w.resize(f.len);
  for (std::size_t t = 0; t < f.len; ++t) {
    const double v = f.g[f.len - 1 - t];
    f.w[t] = (t % 2 == 0) ? v : -v;
  }
  f.k_min = -static_cast<long>((f.len - 1) / 2);
  return f;
}

std::size_t coeff_count(std::size_t n, std::size_t len) {
  return (n - 1) / 2 + (len - 1) / 2 + 1;
}

void analyze_1d(const double* x, std::size_t n, const Filters& f, double* approx, double* detail) {
  const long k_max = static_cast<long>((n - 1) / 2);
  std::size_t out = 0;
  for (long k = f.k_min; k <= k_max; ++k, ++out) {
    const long start = 2 * k;
    const long i0 = std::max<long>(0, start);
    const long i1 = std::min<long>(static_cast<long>(n) - 1, start + static_cast<long>(f.len) - 1);
    double a = 0.0;
    double d = 0.0;
    for (long i = i0; i <= i1; ++i) {
      const double xv = x[i];
      const std::size_t t = static_cast<std::size_t>(i - start);
      a += xv * f.g[t];
      d += xv * f.w[t];
    }
    approx[out] = a;
    detail[out] = d;
  }
}

void synthesize_1d(const double* approx, const double* detail, std::size_t nc, const Filters& f,
                   double* out, std::size_t n) {
  std::fill(out, out + n, 0.0);
  const long k_max = f.k_min + static_cast<long>(nc) - 1;
  for (long k = f.k_min; k <= k_max; ++k) {
    const std::size_t idx = static_cast<std::size_t>(k - f.k_min);
    const double a = approx[idx];
    const double d = detail[idx];
    if (a == 0.0 && d == 0.0) continue;
    const long start = 2 * k;
    const long i0 = std::max<long>(0, start);
    const long i1 = std::min<long>(static_cast<long>(n) - 1, start + static_cast<long>(f.len) - 1);
    for (long i = i0; i <= i1; ++i) {
      const std::size_t t = static_cast<std::size_t>(i - start);
      out[i] += a * f.g[t] + d * f.w[t];
    }
  }
}

struct LevelDims {
  std::size_t in_h, in_w;
  std::size_t out_h, out_w;
};

std::vector<LevelDims> plan_levels(std::size_t h, std::size_t w, int levels, std::size_t len) {
  std::vector<LevelDims> plan;
  plan.reserve(static_cast<std::size_t>(levels));
  for (int j = 0; j < levels; ++j) {
    LevelDims d;
    d.in_h = h;
    d.in_w = w;
    d.out_h = coeff_count(h, len);
    d.out_w = coeff_count(w, len);
    plan.push_back(d);
    h = d.out_h;
    w = d.out_w;
  }
  return plan;
}

// Per-level detail planes (horizontal, vertical, diagonal) plus the final
// approximation plane.
struct PlaneCoeffs {
  std::vector<std::array<std::vector<double>, 3>> details;
  std::vector<double> approx;
};

PlaneCoeffs forward_plane(const std::vector<double>& plane, const std::vector<LevelDims>& plan,
                          const Filters& f) {
  PlaneCoeffs out;
  out.details.resize(plan.size());
  std::vector<double> current = plane;
  for (std::size_t j = 0; j < plan.size(); ++j) {
    const LevelDims& d = plan[j];
    // Rows: x-direction split into low/high parts.
    std::vector<double> row_lo(d.in_h * d.out_w), row_hi(d.in_h * d.out_w);
    for (std::size_t y = 0; y < d.in_h; ++y) {
      analyze_1d(current.data() + y * d.in_w, d.in_w, f, row_lo.data() + y * d.out_w,
                 row_hi.data() + y * d.out_w);
    }
    // Columns on each part.
    std::vector<double> ll(d.out_h * d.out_w), lh(d.out_h * d.out_w);
    std::vector<double> hl(d.out_h * d.out_w), hh(d.out_h * d.out_w);
    std::vector<double> col(d.in_h), ca(d.out_h), cd(d.out_h);
    for (std::size_t x = 0; x < d.out_w; ++x) {
      for (std::size_t y = 0; y < d.in_h; ++y) col[y] = row_lo[y * d.out_w + x];
      analyze_1d(col.data(), d.in_h, f, ca.data(), cd.data());
      for (std::size_t y = 0; y < d.out_h; ++y) {
        ll[y * d.out_w + x] = ca[y];
        lh[y * d.out_w + x] = cd[y];
      }
      for (std::size_t y = 0; y < d.in_h; ++y) col[y] = row_hi[y * d.out_w + x];
      analyze_1d(col.data(), d.in_h, f, ca.data(), cd.data());
      for (std::size_t y = 0; y < d.out_h; ++y) {
        hl[y * d.out_w + x] = ca[y];
        hh[y * d.out_w + x] = cd[y];
      }
    }
    out.details[j][0] = std::move(lh);  // horizontal: x-low, y-high
    out.details[j][1] = std::move(hl);  // vertical: x-high, y-low
    out.details[j][2] = std::move(hh);  // diagonal
    current = std::move(ll);
  }
  out.approx = std::move(current);
  return out;
}

std::vector<double> inverse_plane(const PlaneCoeffs& coeffs, const std::vector<LevelDims>& plan,
                                  const Filters& f) {
  std::vector<double> current = coeffs.approx;
  for (std::size_t j = plan.size(); j-- > 0;) {
    const LevelDims& d = plan[j];
    const auto& lh = coeffs.details[j][0];
    const auto& hl = coeffs.details[j][1];
    const auto& hh = coeffs.details[j][2];
    // Column adjoints back to in_h rows.
    std::vector<double> row_lo(d.in_h * d.out_w), row_hi(d.in_h * d.out_w);
    std::vector<double> ca(d.out_h), cd(d.out_h), col(d.in_h);
    for (std::size_t x = 0; x < d.out_w; ++x) {
      for (std::size_t y = 0; y < d.out_h; ++y) {
        ca[y] = current[y * d.out_w + x];
        cd[y] = lh[y * d.out_w + x];
      }
      synthesize_1d(ca.data(), cd.data(), d.out_h, f, col.data(), d.in_h);
      for (std::size_t y = 0; y < d.in_h; ++y) row_lo[y * d.out_w + x] = col[y];
      for (std::size_t y = 0; y < d.out_h; ++y) {
        ca[y] = hl[y * d.out_w + x];
        cd[y] = hh[y * d.out_w + x];
      }
      synthesize_1d(ca.data(), cd.data(), d.out_h, f, col.data(), d.in_h);
      for (std::size_t y = 0; y < d.in_h; ++y) row_hi[y * d.out_w + x] = col[y];
    }
    // Row adjoints back to in_w columns.
    std::vector<double> plane(d.in_h * d.in_w);
    for (std::size_t y = 0; y < d.in_h; ++y) {
      synthesize_1d(row_lo.data() + y * d.out_w, row_hi.data() + y * d.out_w, d.out_w, f,
                    plane.data() + y * d.in_w, d.in_w);
    }
    current = std::move(plane);
  }
  return current;
}

class Dwt2dRep final : public RepresentationSystem {
public:
  Dwt2dRep(Shape shape, WaveletSpec spec) : shape_(std::move(shape)), spec_(spec) {
    if (shape_.is_composite() || shape_.dims.size() < 2) fail("make_dwt2d: requires an image shape");
    if (spec_.levels < 1) fail("make_dwt2d: levels must be >= 1");
    const int max_levels = dwt_max_levels(shape_.height(), shape_.width());
    if (spec_.levels > max_levels) {
      std::ostringstream os;
      os << "make_dwt2d: " << spec_.levels << " levels exceed maximum " << max_levels << " for "
         << shape_.height() << "x" << shape_.width();
      fail(os.str());
    }
    filters_ = make_filters(spec_.order);
    plan_ = plan_levels(shape_.height(), shape_.width(), spec_.levels, filters_.len);

    const std::size_t channels = shape_.channels();
    std::size_t blocks = 0;
    for (const LevelDims& d : plan_) blocks += 3 * d.out_h * d.out_w;
    blocks += plan_.back().out_h * plan_.back().out_w;
    dims_.assign(blocks, channels);
    info_.resize(blocks);
    std::size_t b = 0;
    const Subband subbands[3] = {Subband::horizontal, Subband::vertical, Subband::diagonal};
    for (std::size_t j = 0; j < plan_.size(); ++j) {
      for (int sb = 0; sb < 3; ++sb) {
        const std::size_t count = plan_[j].out_h * plan_[j].out_w;
        for (std::size_t p = 0; p < count; ++p, ++b) {
          info_[b].scale = static_cast<int>(j) + 1;
          info_[b].subband = subbands[sb];
          info_[b].kind = "wavelet";
          info_[b].index = p;
        }
      }
    }
    const std::size_t count = plan_.back().out_h * plan_.back().out_w;
    for (std::size_t p = 0; p < count; ++p, ++b) {
      info_[b].scale = spec_.levels;
      info_[b].subband = Subband::approx;
      info_[b].kind = "wavelet";
      info_[b].index = p;
    }
  }

  Shape signal_shape() const override { return shape_; }
  std::size_t block_count() const override { return dims_.size(); }
  const std::vector<std::size_t>& block_dims() const override { return dims_; }
  const std::vector<BlockInfo>& block_info() const override { return info_; }

  CoefficientVector analyze(const Signal& x) const override {
    if (!(x.shape() == shape_)) fail("dwt analyze: signal shape mismatch");
    const std::size_t channels = shape_.channels();
    const std::size_t plane_size = shape_.height() * shape_.width();
    std::vector<PlaneCoeffs> per_channel(channels);
    for (std::size_t c = 0; c < channels; ++c) {
      std::vector<double> plane(x.values().begin() + c * plane_size,
                                x.values().begin() + (c + 1) * plane_size);
      per_channel[c] = forward_plane(plane, plan_, filters_);
    }
    std::vector<double> values(dims_.size() * channels);
    std::size_t pos = 0;
    for (std::size_t j = 0; j < plan_.size(); ++j) {
      for (int sb = 0; sb < 3; ++sb) {
        const std::size_t count = plan_[j].out_h * plan_[j].out_w;
        for (std::size_t p = 0; p < count; ++p) {
          for (std::size_t c = 0; c < channels; ++c) values[pos++] = per_channel[c].details[j][sb][p];
        }
      }
    }
    const std::size_t count = plan_.back().out_h * plan_.back().out_w;
    for (std::size_t p = 0; p < count; ++p) {
      for (std::size_t c = 0; c < channels; ++c) values[pos++] = per_channel[c].approx[p];
    }
    return CoefficientVector(std::move(values), dims_);
  }

  Signal synthesize(const CoefficientVector& h) const override {
    require_structure(h, "dwt synthesize");
    const std::size_t channels = shape_.channels();
    const std::size_t plane_size = shape_.height() * shape_.width();
    std::vector<double> out(shape_.value_count());
    for (std::size_t c = 0; c < channels; ++c) {
      const PlaneCoeffs coeffs = gather_channel(h.values(), c);
      std::vector<double> plane = inverse_plane(coeffs, plan_, filters_);
      std::copy(plane.begin(), plane.end(), out.begin() + c * plane_size);
    }
    return Signal(std::move(out), shape_);
  }

  CoefficientVector synthesize_vjp(const CoefficientVector& h,
                                   std::span<const double> cot) const override {
    (void)h;
    // Orthonormal analysis is the adjoint of synthesis.
    const std::size_t channels = shape_.channels();
    const std::size_t plane_size = shape_.height() * shape_.width();
    std::vector<double> values(dims_.size() * channels);
    for (std::size_t c = 0; c < channels; ++c) {
      std::vector<double> plane(cot.begin() + c * plane_size, cot.begin() + (c + 1) * plane_size);
      const PlaneCoeffs coeffs = forward_plane(plane, plan_, filters_);
      scatter_channel(coeffs, c, values);
    }
    return CoefficientVector(std::move(values), dims_);
  }

private:
  PlaneCoeffs gather_channel(const std::vector<double>& values, std::size_t c) const {
    const std::size_t channels = shape_.channels();
    PlaneCoeffs coeffs;
    coeffs.details.resize(plan_.size());
    std::size_t pos = 0;
    for (std::size_t j = 0; j < plan_.size(); ++j) {
      const std::size_t count = plan_[j].out_h * plan_[j].out_w;
      for (int sb = 0; sb < 3; ++sb) {
        auto& dst = coeffs.details[j][static_cast<std::size_t>(sb)];
        dst.resize(count);
        for (std::size_t p = 0; p < count; ++p) dst[p] = values[(pos + p) * channels + c];
        pos += count;
      }
    }
    const std::size_t count = plan_.back().out_h * plan_.back().out_w;
    coeffs.approx.resize(count);
    for (std::size_t p = 0; p < count; ++p) coeffs.approx[p] = values[(pos + p) * channels + c];
    return coeffs;
  }

  void scatter_channel(const PlaneCoeffs& coeffs, std::size_t c, std::vector<double>& values) const {
    const std::size_t channels = shape_.channels();
    std::size_t pos = 0;
    for (std::size_t j = 0; j < plan_.size(); ++j) {
      const std::size_t count = plan_[j].out_h * plan_[j].out_w;
      for (int sb = 0; sb < 3; ++sb) {
        const auto& src = coeffs.details[j][static_cast<std::size_t>(sb)];
        for (std::size_t p = 0; p < count; ++p) values[(pos + p) * channels + c] = src[p];
        pos += count;
      }
    }
    const std::size_t count = plan_.back().out_h * plan_.back().out_w;
    for (std::size_t p = 0; p < count; ++p) values[(pos + p) * channels + c] = coeffs.approx[p];
  }

  Shape shape_;
  WaveletSpec spec_;
  Filters filters_;
  std::vector<LevelDims> plan_;
  std::vector<std::size_t> dims_;
  std::vector<BlockInfo> info_;
};

}  // namespace

std::vector<double> daubechies_filter(int order) {
  if (order < 1 || order > 10) fail("daubechies_filter: order must be in 1..10");
  if (order == 1) {
    const double r = 1.0 / std::sqrt(2.0);
    return {r, r};
  }
  const int p = order;
  // Binomial half-band polynomial P(y) = sum_k C(p-1+k, k) y^k.
  std::vector<double> poly(static_cast<std::size_t>(p));
  double binom = 1.0;
  for (int k = 0; k < p; ++k) {
    poly[static_cast<std::size_t>(k)] = binom;
    binom = binom * static_cast<double>(p + k) / static_cast<double>(k + 1);
  }
  const std::vector<cplx> y_roots = polynomial_roots(poly);

  // Each y-root maps to a z-pair with product 1; keep the root inside the
  // unit circle (minimum phase).
  std::vector<cplx> z_roots;
  z_roots.reserve(y_roots.size());
  for (const cplx& y : y_roots) {
    const cplx b = 4.0 * y - 2.0;
    const cplx disc = std::sqrt(b * b - 4.0);
    const cplx z1 = (-b + disc) / 2.0;
    const cplx z2 = (-b - disc) / 2.0;
    z_roots.push_back(std::abs(z1) < std::abs(z2) ? z1 : z2);
  }

  // H(z) = c (1+z)^p prod_i (z - z_i), normalized so H(1) = sqrt(2).
  std::vector<cplx> h = {cplx(1.0, 0.0)};
  auto mul_linear = [&](cplx a0, cplx a1) {
    // multiply by (a0 + a1 z)
    std::vector<cplx> next(h.size() + 1, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < h.size(); ++i) {
      next[i] += h[i] * a0;
      next[i + 1] += h[i] * a1;
    }
    h = std::move(next);
  };
  for (int i = 0; i < p; ++i) mul_linear(cplx(1.0, 0.0), cplx(1.0, 0.0));
  for (const cplx& z : z_roots) mul_linear(-z, cplx(1.0, 0.0));

  cplx h_at_1(0.0, 0.0);
  for (const cplx& c : h) h_at_1 += c;
  const cplx scale = std::sqrt(2.0) / h_at_1;

  std::vector<double> filter(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const cplx v = h[i] * scale;
    if (std::abs(v.imag()) > 1e-9) fail("daubechies_filter: factorization produced complex values");
    filter[i] = v.real();
  }
  // Standard extremal-phase ordering.
  std::reverse(filter.begin(), filter.end());
  check_orthonormal(filter);
  return filter;
}

int dwt_max_levels(std::size_t height, std::size_t width) {
  const std::size_t side = std::min(height, width);
  if (side < 2) return 0;
  int levels = 0;
  std::size_t s = side;
  while (s >= 2) {
    s >>= 1;
    ++levels;
  }
  return levels;
}

void dwt_analyze_1d(std::span<const double> x, const std::vector<double>& scaling,
                    std::vector<double>& approx, std::vector<double>& detail) {
  Filters f;
  f.g = scaling;
  f.len = scaling.size();
  f.w.resize(f.len);
  for (std::size_t t = 0; t < f.len; ++t) {
    const double v = f.g[f.len - 1 - t];
    f.w[t] = (t % 2 == 0) ? v : -v;
  }
  f.k_min = -static_cast<long>((f.len - 1) / 2);
  const std::size_t nc = coeff_count(x.size(), f.len);
  approx.resize(nc);
  detail.resize(nc);
  analyze_1d(x.data(), x.size(), f, approx.data(), detail.data());
}

void dwt_synthesize_1d(std::span<const double> approx, std::span<const double> detail,
                       const std::vector<double>& scaling, std::size_t n,
                       std::vector<double>& out) {
  Filters f;
  f.g = scaling;
  f.len = scaling.size();
  f.w.resize(f.len);
  for (std::size_t t = 0; t < f.len; ++t) {
    const double v = f.g[f.len - 1 - t];
    f.w[t] = (t % 2 == 0) ? v : -v;
  }
  f.k_min = -static_cast<long>((f.len - 1) / 2);
  if (approx.size() != detail.size()) fail("dwt_synthesize_1d: subband size mismatch");
  if (coeff_count(n, f.len) != approx.size()) fail("dwt_synthesize_1d: size does not match n");
  out.resize(n);
  synthesize_1d(approx.data(), detail.data(), approx.size(), f, out.data(), n);
}

std::unique_ptr<RepresentationSystem> make_dwt2d(const Shape& image_shape,
                                                 const WaveletSpec& spec) {
  return std::make_unique<Dwt2dRep>(image_shape, spec);
}

CoefficientVector dwt_forward(const Signal& x, const WaveletSpec& spec) {
  return make_dwt2d(x.shape(), spec)->analyze(x);
}

Signal dwt_inverse(const CoefficientVector& h, const WaveletSpec& spec, const Shape& image_shape) {
  return make_dwt2d(image_shape, spec)->synthesize(h);
}

}  // namespace rde
