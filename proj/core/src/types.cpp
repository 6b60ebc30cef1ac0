#include "rde/types.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace rde {

void fail(const std::string& msg) { throw Error(msg); }

namespace {

std::size_t dims_product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

void require_finite(const std::vector<double>& values, std::string_view what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << what << ": non-finite entry at index " << i;
      fail(os.str());
    }
  }
}

}  // namespace

Shape Shape::vector(std::size_t n) {
  Shape s;
  s.dims = {n};
  return s;
}

Shape Shape::image(std::size_t height, std::size_t width, std::size_t channels) {
  Shape s;
  s.dims = {height, width, channels};
  return s;
}

Shape Shape::composite(std::vector<std::pair<std::string, std::vector<std::size_t>>> named_parts) {
  Shape s;
  s.parts = std::move(named_parts);
  return s;
}

std::size_t Shape::value_count() const {
  if (is_composite()) {
    std::size_t total = 0;
    for (const auto& [name, dims] : parts) total += dims_product(dims);
    return total;
  }
  return dims_product(dims);
}

std::size_t Shape::height() const {
  if (dims.size() < 2) fail("Shape: height() requires a 2D/3D shape");
  return dims[0];
}

std::size_t Shape::width() const {
  if (dims.size() < 2) fail("Shape: width() requires a 2D/3D shape");
  return dims[1];
}

std::size_t Shape::channels() const {
  if (dims.size() < 2) fail("Shape: channels() requires a 2D/3D shape");
  return dims.size() >= 3 ? dims[2] : 1;
}

std::size_t Shape::part_offset(std::string_view name) const {
  std::size_t off = 0;
  for (const auto& [part_name, dims] : parts) {
    if (part_name == name) return off;
    off += dims_product(dims);
  }
  fail("Shape: unknown part '" + std::string(name) + "'");
}

std::size_t Shape::part_size(std::string_view name) const {
  for (const auto& [part_name, dims] : parts) {
    if (part_name == name) return dims_product(dims);
  }
  fail("Shape: unknown part '" + std::string(name) + "'");
}

Signal::Signal(std::vector<double> values, Shape shape)
    : values_(std::move(values)), shape_(std::move(shape)) {
  if (values_.size() != shape_.value_count()) {
    std::ostringstream os;
    os << "Signal: value count " << values_.size() << " does not match shape count "
       << shape_.value_count();
    fail(os.str());
  }
  require_finite(values_, "Signal");
}

std::span<const double> Signal::part(std::string_view name) const {
  const std::size_t off = shape_.part_offset(name);
  const std::size_t n = shape_.part_size(name);
  return std::span<const double>(values_).subspan(off, n);
}

CoefficientVector::CoefficientVector(std::vector<double> values, std::vector<std::size_t> block_dims)
    : values_(std::move(values)), dims_(std::move(block_dims)) {
  if (dims_.empty()) fail("CoefficientVector: needs at least one block");
  offsets_.resize(dims_.size());
  std::size_t off = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i] == 0) fail("CoefficientVector: block dims must be >= 1");
    offsets_[i] = off;
    off += dims_[i];
  }
  if (off != values_.size()) {
    std::ostringstream os;
    os << "CoefficientVector: " << values_.size() << " values but block dims sum to " << off;
    fail(os.str());
  }
  require_finite(values_, "CoefficientVector");
}

CoefficientVector CoefficientVector::from_blocks(const std::vector<std::vector<double>>& blocks) {
  std::vector<double> values;
  std::vector<std::size_t> dims;
  dims.reserve(blocks.size());
  for (const auto& b : blocks) {
    dims.push_back(b.size());
    values.insert(values.end(), b.begin(), b.end());
  }
  return CoefficientVector(std::move(values), std::move(dims));
}

CoefficientVector CoefficientVector::zeros_like(const CoefficientVector& other) {
  return CoefficientVector(std::vector<double>(other.total_size(), 0.0), other.dims_);
}

CoefficientVector CoefficientVector::zeros(std::size_t block_count, std::size_t block_dim) {
  return CoefficientVector(std::vector<double>(block_count * block_dim, 0.0),
                           std::vector<std::size_t>(block_count, block_dim));
}

std::span<const double> CoefficientVector::block(std::size_t i) const {
  return std::span<const double>(values_).subspan(offsets_[i], dims_[i]);
}

std::span<double> CoefficientVector::block(std::size_t i) {
  return std::span<double>(values_).subspan(offsets_[i], dims_[i]);
}

bool CoefficientVector::same_structure(const CoefficientVector& other) const {
  return dims_ == other.dims_;
}

void CoefficientVector::require_same_structure(const CoefficientVector& other,
                                               std::string_view context) const {
  if (dims_.size() != other.dims_.size()) {
    std::ostringstream os;
    os << context << ": block count mismatch (" << dims_.size() << " vs " << other.dims_.size()
       << ")";
    fail(os.str());
  }
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i] != other.dims_[i]) {
      std::ostringstream os;
      os << context << ": block " << i << " has dim " << dims_[i] << " vs " << other.dims_[i];
      fail(os.str());
    }
  }
}

Mask::Mask(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double v = values_[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      std::ostringstream os;
      os << "Mask: entry " << i << " = " << v << " outside [0,1]";
      fail(os.str());
    }
  }
}

Mask Mask::ones(std::size_t k) { return Mask(std::vector<double>(k, 1.0)); }

Mask Mask::zeros(std::size_t k) { return Mask(std::vector<double>(k, 0.0)); }

void Mask::set(std::size_t i, double value) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    std::ostringstream os;
    os << "Mask: entry " << i << " = " << value << " outside [0,1]";
    fail(os.str());
  }
  values_[i] = value;
}

bool Mask::is_binary() const {
  for (double v : values_) {
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

std::size_t Mask::sparsity_l0() const {
  std::size_t count = 0;
  for (double v : values_) {
    if (v != 0.0) ++count;
  }
  return count;
}

double Mask::sparsity_l1() const {
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum;
}

}  // namespace rde
