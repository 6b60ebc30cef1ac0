#include "rde/representations.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace rde {

namespace {

class IdentityRep final : public RepresentationSystem {
public:
  IdentityRep(Shape shape, std::size_t cpb) : shape_(std::move(shape)), cpb_(cpb) {
    const std::size_t n = shape_.value_count();
    if (cpb_ == 0 || n % cpb_ != 0) {
      std::ostringstream os;
      os << "make_identity: value count " << n << " not divisible by " << cpb_;
      fail(os.str());
    }
    strided_ = false;
    if (!shape_.is_composite() && shape_.dims.size() == 3 && shape_.channels() > 1) {
      if (cpb_ != 1 && cpb_ != shape_.channels()) {
        fail("make_identity: channels_per_block must be 1 or the channel count for images");
      }
      strided_ = cpb_ == shape_.channels();
    }
    const std::size_t k = n / cpb_;
    dims_.assign(k, cpb_);
    info_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      info_[i].kind = "pixel";
      info_[i].index = i;
    }
  }

  Shape signal_shape() const override { return shape_; }
  std::size_t block_count() const override { return dims_.size(); }
  const std::vector<std::size_t>& block_dims() const override { return dims_; }
  const std::vector<BlockInfo>& block_info() const override { return info_; }

  Signal synthesize(const CoefficientVector& h) const override {
    require_structure(h, "identity synthesize");
    return Signal(scatter(h.values()), shape_);
  }

  CoefficientVector analyze(const Signal& x) const override {
    return CoefficientVector(gather(x.values()), dims_);
  }

  CoefficientVector synthesize_vjp(const CoefficientVector& h,
                                   std::span<const double> cot) const override {
    (void)h;
    return CoefficientVector(gather(cot), dims_);
  }

private:
  // Coefficient order -> signal order (planar channel gather for images).
  std::vector<double> scatter(std::span<const double> coeffs) const {
    std::vector<double> out(coeffs.size());
    if (!strided_) {
      std::copy(coeffs.begin(), coeffs.end(), out.begin());
      return out;
    }
    const std::size_t plane = shape_.height() * shape_.width();
    const std::size_t channels = shape_.channels();
    for (std::size_t i = 0; i < plane; ++i) {
      for (std::size_t c = 0; c < channels; ++c) {
        out[c * plane + i] = coeffs[i * channels + c];
      }
    }
    return out;
  }

  std::vector<double> gather(std::span<const double> values) const {
    std::vector<double> out(values.size());
    if (!strided_) {
      std::copy(values.begin(), values.end(), out.begin());
      return out;
    }
    const std::size_t plane = shape_.height() * shape_.width();
    const std::size_t channels = shape_.channels();
    for (std::size_t i = 0; i < plane; ++i) {
      for (std::size_t c = 0; c < channels; ++c) {
        out[i * channels + c] = values[c * plane + i];
      }
    }
    return out;
  }

  Shape shape_;
  std::size_t cpb_;
  bool strided_;
  std::vector<std::size_t> dims_;
  std::vector<BlockInfo> info_;
};

class PatchRep final : public RepresentationSystem {
public:
  PatchRep(Shape shape, std::size_t side) : shape_(std::move(shape)), side_(side) {
    if (shape_.is_composite() || shape_.dims.size() < 2) {
      fail("make_patch: requires an image shape");
    }
    const std::size_t h = shape_.height();
    const std::size_t w = shape_.width();
    if (side_ == 0 || h % side_ != 0 || w % side_ != 0) {
      std::ostringstream os;
      os << "make_patch: image " << h << "x" << w << " not divisible by patch side " << side_;
      fail(os.str());
    }
    const std::size_t channels = shape_.channels();
    const std::size_t k = (h / side_) * (w / side_);
    dims_.assign(k, side_ * side_ * channels);
    info_.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      info_[i].kind = "patch";
      info_[i].index = i;
    }
  }

  Shape signal_shape() const override { return shape_; }
  std::size_t block_count() const override { return dims_.size(); }
  const std::vector<std::size_t>& block_dims() const override { return dims_; }
  const std::vector<BlockInfo>& block_info() const override { return info_; }

  Signal synthesize(const CoefficientVector& h) const override {
    require_structure(h, "patch synthesize");
    std::vector<double> out(shape_.value_count());
    for_each_index([&](std::size_t coeff_pos, std::size_t signal_pos) {
      out[signal_pos] = h.values()[coeff_pos];
    });
    return Signal(std::move(out), shape_);
  }

  CoefficientVector analyze(const Signal& x) const override {
    std::vector<double> coeffs(shape_.value_count());
    for_each_index(
        [&](std::size_t coeff_pos, std::size_t signal_pos) { coeffs[coeff_pos] = x[signal_pos]; });
    return CoefficientVector(std::move(coeffs), dims_);
  }

  CoefficientVector synthesize_vjp(const CoefficientVector& h,
                                   std::span<const double> cot) const override {
    (void)h;
    std::vector<double> coeffs(shape_.value_count());
    for_each_index(
        [&](std::size_t coeff_pos, std::size_t signal_pos) { coeffs[coeff_pos] = cot[signal_pos]; });
    return CoefficientVector(std::move(coeffs), dims_);
  }

private:
  // Within a block, values are laid out channel-planar: (c, y, x).
  template <typename Fn>
  void for_each_index(Fn&& fn) const {
    const std::size_t h = shape_.height();
    const std::size_t w = shape_.width();
    const std::size_t channels = shape_.channels();
    const std::size_t plane = h * w;
    const std::size_t patches_x = w / side_;
    const std::size_t block_size = side_ * side_ * channels;
    for (std::size_t py = 0; py < h / side_; ++py) {
      for (std::size_t px = 0; px < patches_x; ++px) {
        const std::size_t block = py * patches_x + px;
        std::size_t offset = block * block_size;
        for (std::size_t c = 0; c < channels; ++c) {
          for (std::size_t dy = 0; dy < side_; ++dy) {
            for (std::size_t dx = 0; dx < side_; ++dx, ++offset) {
              const std::size_t y = py * side_ + dy;
              const std::size_t x = px * side_ + dx;
              fn(offset, c * plane + y * w + x);
            }
          }
        }
      }
    }
  }

  Shape shape_;
  std::size_t side_;
  std::vector<std::size_t> dims_;
  std::vector<BlockInfo> info_;
};

// Dense LU with partial pivoting; used for the dictionary analysis solve.
struct LuFactors {
  std::vector<double> lu;  // n x n, row-major
  std::vector<std::size_t> perm;
  std::size_t n = 0;
  bool singular = false;
};

LuFactors lu_factor(std::vector<double> a, std::size_t n) {
  LuFactors f;
  f.lu = std::move(a);
  f.n = n;
  f.perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::abs(f.lu[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::abs(f.lu[r * n + col]);
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (best == 0.0) {
      f.singular = true;
      return f;
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(f.lu[pivot * n + c], f.lu[col * n + c]);
      std::swap(f.perm[pivot], f.perm[col]);
    }
    const double d = f.lu[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double m = f.lu[r * n + col] / d;
      f.lu[r * n + col] = m;
      for (std::size_t c = col + 1; c < n; ++c) f.lu[r * n + c] -= m * f.lu[col * n + c];
    }
  }
  return f;
}

std::vector<double> lu_solve(const LuFactors& f, std::span<const double> b) {
  const std::size_t n = f.n;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = b[f.perm[i]];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) y[i] -= f.lu[i * n + j] * y[j];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) y[i] -= f.lu[i * n + j] * y[j];
    y[i] /= f.lu[i * n + i];
  }
  return y;
}

double one_norm_cols(const std::vector<double>& a, std::size_t n) {
  double best = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += std::abs(a[r * n + c]);
    best = std::max(best, sum);
  }
  return best;
}

class DictionaryRep final : public RepresentationSystem {
public:
  explicit DictionaryRep(const std::vector<std::vector<double>>& atoms) {
    if (atoms.empty()) fail("make_dictionary: needs at least one atom");
    n_ = atoms[0].size();
    if (n_ == 0) fail("make_dictionary: atoms must be non-empty");
    k_ = atoms.size();
    atoms_.resize(k_ * n_);
    for (std::size_t j = 0; j < k_; ++j) {
      if (atoms[j].size() != n_) {
        std::ostringstream os;
        os << "make_dictionary: atom " << j << " has length " << atoms[j].size() << ", expected "
           << n_;
        fail(os.str());
      }
      std::copy(atoms[j].begin(), atoms[j].end(), atoms_.begin() + j * n_);
    }
    dims_.assign(k_, 1);
    info_.resize(k_);
    for (std::size_t j = 0; j < k_; ++j) {
      info_[j].kind = "atom";
      info_[j].index = j;
    }
    if (k_ == n_) setup_analysis();
  }

  Shape signal_shape() const override { return Shape::vector(n_); }
  std::size_t block_count() const override { return k_; }
  const std::vector<std::size_t>& block_dims() const override { return dims_; }
  const std::vector<BlockInfo>& block_info() const override { return info_; }

  Signal synthesize(const CoefficientVector& h) const override {
    require_structure(h, "dictionary synthesize");
    std::vector<double> out(n_, 0.0);
    for (std::size_t j = 0; j < k_; ++j) {
      const double hj = h.values()[j];
      if (hj == 0.0) continue;
      const double* atom = atoms_.data() + j * n_;
      for (std::size_t i = 0; i < n_; ++i) out[i] += hj * atom[i];
    }
    return Signal(std::move(out), Shape::vector(n_));
  }

  bool has_analysis() const override { return has_analysis_; }

  CoefficientVector analyze(const Signal& x) const override {
    if (!has_analysis_) fail("dictionary analyze: " + analysis_error_);
    return CoefficientVector(lu_solve(lu_, x.values()), dims_);
  }

  CoefficientVector synthesize_vjp(const CoefficientVector& h,
                                   std::span<const double> cot) const override {
    (void)h;
    std::vector<double> g(k_);
    for (std::size_t j = 0; j < k_; ++j) {
      const double* atom = atoms_.data() + j * n_;
      double sum = 0.0;
      for (std::size_t i = 0; i < n_; ++i) sum += atom[i] * cot[i];
      g[j] = sum;
    }
    return CoefficientVector(std::move(g), dims_);
  }

private:
  void setup_analysis() {
    // Matrix A with columns = atoms; analyze solves A h = x.
    std::vector<double> a(n_ * n_);
    for (std::size_t j = 0; j < n_; ++j) {
      for (std::size_t i = 0; i < n_; ++i) a[i * n_ + j] = atoms_[j * n_ + i];
    }
    lu_ = lu_factor(a, n_);
    if (lu_.singular) {
      analysis_error_ = "basis is singular";
      return;
    }
    // 1-norm condition number via explicit inverse columns; n is small here.
    std::vector<double> inv(n_ * n_);
    std::vector<double> e(n_, 0.0);
    for (std::size_t c = 0; c < n_; ++c) {
      e[c] = 1.0;
      const std::vector<double> col = lu_solve(lu_, e);
      for (std::size_t r = 0; r < n_; ++r) inv[r * n_ + c] = col[r];
      e[c] = 0.0;
    }
    const double cond = one_norm_cols(a, n_) * one_norm_cols(inv, n_);
    if (!(cond <= 1e12)) {
      std::ostringstream os;
      os << "basis condition number " << cond << " exceeds 1e12";
      analysis_error_ = os.str();
      return;
    }
    has_analysis_ = true;
  }

  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<double> atoms_;  // k x n, atom-major
  std::vector<std::size_t> dims_;
  std::vector<BlockInfo> info_;
  LuFactors lu_;
  bool has_analysis_ = false;
  std::string analysis_error_ = "atoms do not form a basis (analysis unavailable)";
};

class GroupedStructuralRep final : public RepresentationSystem {
public:
  GroupedStructuralRep(std::vector<std::vector<std::size_t>> groups,
                       std::vector<std::size_t> locations, std::size_t height, std::size_t width,
                       std::vector<double> tx)
      : groups_(std::move(groups)),
        locations_(std::move(locations)),
        height_(height),
        width_(width),
        tx_(std::move(tx)) {
    const std::size_t plane = height_ * width_;
    if (tx_.size() != plane) fail("make_grouped_structural: tx part size mismatch");
    std::unordered_set<std::size_t> seen;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      if (groups_[g].empty()) fail("make_grouped_structural: empty building group");
      for (std::size_t p : groups_[g]) {
        if (p >= plane) fail("make_grouped_structural: building pixel out of range");
        if (!seen.insert(p).second) {
          std::ostringstream os;
          os << "make_grouped_structural: overlapping building groups at pixel " << p;
          fail(os.str());
        }
      }
    }
    std::unordered_set<std::size_t> seen_loc;
    for (std::size_t p : locations_) {
      if (p >= plane) fail("make_grouped_structural: measurement location out of range");
      if (!seen_loc.insert(p).second) fail("make_grouped_structural: duplicate measurement location");
    }
    const std::size_t k = groups_.size() + locations_.size();
    if (k == 0) fail("make_grouped_structural: no blocks");
    dims_.assign(k, 1);
    info_.resize(k);
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      info_[g].kind = "building";
      info_[g].index = g;
    }
    for (std::size_t j = 0; j < locations_.size(); ++j) {
      info_[groups_.size() + j].kind = "measurement";
      info_[groups_.size() + j].index = locations_[j];
    }
    shape_ = Shape::composite({{"tx", {height_, width_}},
                               {"city", {height_, width_}},
                               {"meas", {height_, width_}}});
  }

  Shape signal_shape() const override { return shape_; }
  std::size_t block_count() const override { return dims_.size(); }
  const std::vector<std::size_t>& block_dims() const override { return dims_; }
  const std::vector<BlockInfo>& block_info() const override { return info_; }

  Signal synthesize(const CoefficientVector& h) const override {
    require_structure(h, "grouped synthesize");
    const std::size_t plane = height_ * width_;
    std::vector<double> out(3 * plane, 0.0);
    std::copy(tx_.begin(), tx_.end(), out.begin());
    double* city = out.data() + plane;
    double* meas = out.data() + 2 * plane;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      const double v = h.values()[g];
      for (std::size_t p : groups_[g]) city[p] = v;
    }
    for (std::size_t j = 0; j < locations_.size(); ++j) {
      meas[locations_[j]] = h.values()[groups_.size() + j];
    }
    return Signal(std::move(out), shape_);
  }

  CoefficientVector analyze(const Signal& x) const override {
    const auto city = x.part("city");
    const auto meas = x.part("meas");
    std::vector<double> h(dims_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      double sum = 0.0;
      for (std::size_t p : groups_[g]) sum += city[p];
      h[g] = sum / static_cast<double>(groups_[g].size());
    }
    for (std::size_t j = 0; j < locations_.size(); ++j) {
      h[groups_.size() + j] = meas[locations_[j]];
    }
    return CoefficientVector(std::move(h), dims_);
  }

  CoefficientVector synthesize_vjp(const CoefficientVector& h,
                                   std::span<const double> cot) const override {
    (void)h;
    const std::size_t plane = height_ * width_;
    std::vector<double> g(dims_.size(), 0.0);
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      double sum = 0.0;
      for (std::size_t p : groups_[gi]) sum += cot[plane + p];
      g[gi] = sum;
    }
    for (std::size_t j = 0; j < locations_.size(); ++j) {
      g[groups_.size() + j] = cot[2 * plane + locations_[j]];
    }
    return CoefficientVector(std::move(g), dims_);
  }

private:
  std::vector<std::vector<std::size_t>> groups_;
  std::vector<std::size_t> locations_;
  std::size_t height_;
  std::size_t width_;
  std::vector<double> tx_;
  Shape shape_;
  std::vector<std::size_t> dims_;
  std::vector<BlockInfo> info_;
};

}  // namespace

std::unique_ptr<RepresentationSystem> make_identity(const Shape& shape,
                                                    std::size_t channels_per_block) {
  return std::make_unique<IdentityRep>(shape, channels_per_block);
}

std::unique_ptr<RepresentationSystem> make_patch(const Shape& image_shape, std::size_t patch_side) {
  return std::make_unique<PatchRep>(image_shape, patch_side);
}

std::unique_ptr<RepresentationSystem> make_dictionary(
    const std::vector<std::vector<double>>& atoms) {
  return std::make_unique<DictionaryRep>(atoms);
}

std::unique_ptr<RepresentationSystem> make_grouped_structural(
    const std::vector<std::vector<std::size_t>>& building_pixel_groups,
    const std::vector<std::size_t>& measurement_locations, std::size_t height, std::size_t width,
    std::vector<double> tx_part) {
  return std::make_unique<GroupedStructuralRep>(building_pixel_groups, measurement_locations,
                                                height, width, std::move(tx_part));
}

}  // namespace rde
