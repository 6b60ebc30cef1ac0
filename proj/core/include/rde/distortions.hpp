#pragma once

#include <memory>
#include <vector>

#include "rde/core.hpp"

namespace rde {

/// Numerically stable softmax (max-subtraction).
std::vector<double> softmax(std::span<const double> v);

/// Predicted label: argmax with lowest-index tie-break.
std::size_t argmax_label(std::span<const double> scores);

/// d1: C * (ref[j*] - pert[j*])^2 on pre-softmax scores.
class SquaredScoreDistortion final : public DistortionMeasure {
public:
  SquaredScoreDistortion(std::size_t label, double scale = 1.0);
  double evaluate(std::span<const double> reference,
                  std::span<const double> perturbed) const override;
  std::vector<double> gradient_wrt_perturbed(std::span<const double> reference,
                                             std::span<const double> perturbed) const override;

private:
  std::size_t label_;
  double scale_;
};

/// d2: squared difference of softmax probabilities at j*.
class SquaredProbabilityDistortion final : public DistortionMeasure {
public:
  explicit SquaredProbabilityDistortion(std::size_t label);
  double evaluate(std::span<const double> reference,
                  std::span<const double> perturbed) const override;
  std::vector<double> gradient_wrt_perturbed(std::span<const double> reference,
                                             std::span<const double> perturbed) const override;

private:
  std::size_t label_;
};

/// d4: squared l2 distance restricted to a component subset; the full index
/// set recovers d3.
class SubsetL2Distortion final : public DistortionMeasure {
public:
  explicit SubsetL2Distortion(std::vector<std::size_t> indices);
  static SubsetL2Distortion full(std::size_t output_dim);
  double evaluate(std::span<const double> reference,
                  std::span<const double> perturbed) const override;
  std::vector<double> gradient_wrt_perturbed(std::span<const double> reference,
                                             std::span<const double> perturbed) const override;
  const std::vector<std::size_t>& indices() const { return indices_; }

private:
  std::vector<std::size_t> indices_;
};

double d1_presoftmax(std::span<const double> ref, std::span<const double> pert, std::size_t label,
                     double scale);
double d2_postsoftmax(std::span<const double> ref, std::span<const double> pert,
                      std::size_t label);
double d_subset_l2(std::span<const double> ref, std::span<const double> pert,
                   const std::vector<std::size_t>& indices);

}  // namespace rde
