#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rde {

/// Error type thrown on contract violations (shape mismatches, invalid
/// configuration, non-finite values).
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] void fail(const std::string& msg);

/// Dimension descriptor for a Signal. Either a plain tensor described by
/// `dims`, or a composite of named parts, each itself a plain tensor.
///
/// Image tensors use dims {height, width, channels} with planar channel
/// storage: value index of (channel c, row y, column x) is
/// c*H*W + y*W + x.
struct Shape {
  std::vector<std::size_t> dims;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> parts;

  static Shape vector(std::size_t n);
  static Shape image(std::size_t height, std::size_t width, std::size_t channels = 1);
  static Shape composite(std::vector<std::pair<std::string, std::vector<std::size_t>>> named_parts);

  bool is_composite() const { return !parts.empty(); }
  std::size_t value_count() const;

  // Image accessors; valid only for 2D/3D plain shapes.
  std::size_t height() const;
  std::size_t width() const;
  std::size_t channels() const;

  // Composite accessors.
  std::size_t part_count() const { return parts.size(); }
  std::size_t part_offset(std::string_view name) const;
  std::size_t part_size(std::string_view name) const;

  bool operator==(const Shape&) const = default;
};

/// Flat real vector with shape metadata; the model-input domain object.
/// All entries are finite; the value count matches the shape.
class Signal {
public:
  Signal() = default;
  Signal(std::vector<double> values, Shape shape);

  const std::vector<double>& values() const { return values_; }
  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<const double> part(std::string_view name) const;

private:
  std::vector<double> values_;
  Shape shape_;
};

/// Block-structured coefficient vector h = (h_1, ..., h_k), h_i in R^{d_i}.
/// Stored flat with per-block dims and offsets.
class CoefficientVector {
public:
  CoefficientVector() = default;
  CoefficientVector(std::vector<double> values, std::vector<std::size_t> block_dims);

  static CoefficientVector from_blocks(const std::vector<std::vector<double>>& blocks);
  static CoefficientVector zeros_like(const CoefficientVector& other);
  /// k blocks of uniform dimension d, all entries zero.
  static CoefficientVector zeros(std::size_t block_count, std::size_t block_dim);

  std::size_t block_count() const { return dims_.size(); }
  std::size_t block_dim(std::size_t i) const { return dims_[i]; }
  std::size_t block_offset(std::size_t i) const { return offsets_[i]; }
  std::size_t total_size() const { return values_.size(); }

  std::span<const double> block(std::size_t i) const;
  std::span<double> block(std::size_t i);

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<std::size_t>& block_dims() const { return dims_; }

  bool same_structure(const CoefficientVector& other) const;
  /// Throws naming the first offending block on structure mismatch.
  void require_same_structure(const CoefficientVector& other, std::string_view context) const;

private:
  std::vector<double> values_;
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
};

/// Per-block relevance values s in [0,1]^k.
class Mask {
public:
  Mask() = default;
  explicit Mask(std::vector<double> values);

  static Mask ones(std::size_t k);
  static Mask zeros(std::size_t k);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  void set(std::size_t i, double value);

  bool is_binary() const;
  std::size_t sparsity_l0() const;
  double sparsity_l1() const;

private:
  std::vector<double> values_;
};

/// Monte-Carlo estimate of the expected distortion.
struct DistortionEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
};

/// Inclusive clipping range applied to synthesized signals (image pipelines
/// use [0,1]; non-image pipelines pass none).
struct ClipRange {
  double lo = 0.0;
  double hi = 1.0;
};

}  // namespace rde
