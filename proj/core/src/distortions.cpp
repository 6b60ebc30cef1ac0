#include "rde/distortions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rde {

namespace {

void require_label(std::span<const double> v, std::size_t label, std::string_view who) {
  if (label >= v.size()) {
    std::ostringstream os;
    os << who << ": label " << label << " out of range for output dim " << v.size();
    fail(os.str());
  }
}

}  // namespace

std::vector<double> softmax(std::span<const double> v) {
  if (v.empty()) fail("softmax: empty input");
  double max = v[0];
  for (double x : v) max = std::max(max, x);
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - max);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

std::size_t argmax_label(std::span<const double> scores) {
  if (scores.empty()) fail("argmax_label: empty scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

SquaredScoreDistortion::SquaredScoreDistortion(std::size_t label, double scale)
    : label_(label), scale_(scale) {
  if (scale_ <= 0.0) fail("SquaredScoreDistortion: scale must be positive");
}

double SquaredScoreDistortion::evaluate(std::span<const double> reference,
                                        std::span<const double> perturbed) const {
  require_label(reference, label_, "d1");
  require_label(perturbed, label_, "d1");
  const double diff = reference[label_] - perturbed[label_];
  return scale_ * diff * diff;
}

std::vector<double> SquaredScoreDistortion::gradient_wrt_perturbed(
    std::span<const double> reference, std::span<const double> perturbed) const {
  require_label(reference, label_, "d1");
  require_label(perturbed, label_, "d1");
  std::vector<double> g(perturbed.size(), 0.0);
  g[label_] = -2.0 * scale_ * (reference[label_] - perturbed[label_]);
  return g;
}

SquaredProbabilityDistortion::SquaredProbabilityDistortion(std::size_t label) : label_(label) {}

double SquaredProbabilityDistortion::evaluate(std::span<const double> reference,
                                              std::span<const double> perturbed) const {
  require_label(reference, label_, "d2");
  require_label(perturbed, label_, "d2");
  const std::vector<double> pr = softmax(reference);
  const std::vector<double> pp = softmax(perturbed);
  const double diff = pr[label_] - pp[label_];
  return diff * diff;
}

std::vector<double> SquaredProbabilityDistortion::gradient_wrt_perturbed(
    std::span<const double> reference, std::span<const double> perturbed) const {
  require_label(reference, label_, "d2");
  require_label(perturbed, label_, "d2");
  const std::vector<double> pr = softmax(reference);
  const std::vector<double> pp = softmax(perturbed);
  const double diff = pr[label_] - pp[label_];
  // d sigma_j* / d z_i = sigma_j* (delta_{i,j*} - sigma_i)
  std::vector<double> g(perturbed.size());
  const double base = -2.0 * diff * pp[label_];
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double delta = i == label_ ? 1.0 : 0.0;
    g[i] = base * (delta - pp[i]);
  }
  return g;
}

SubsetL2Distortion::SubsetL2Distortion(std::vector<std::size_t> indices)
    : indices_(std::move(indices)) {
  if (indices_.empty()) fail("SubsetL2Distortion: subset must be non-empty");
}

SubsetL2Distortion SubsetL2Distortion::full(std::size_t output_dim) {
  if (output_dim == 0) fail("SubsetL2Distortion: output dim must be >= 1");
  std::vector<std::size_t> all(output_dim);
  for (std::size_t i = 0; i < output_dim; ++i) all[i] = i;
  return SubsetL2Distortion(std::move(all));
}

double SubsetL2Distortion::evaluate(std::span<const double> reference,
                                    std::span<const double> perturbed) const {
  double sum = 0.0;
  for (std::size_t j : indices_) {
    require_label(reference, j, "d_subset_l2");
    require_label(perturbed, j, "d_subset_l2");
    const double diff = reference[j] - perturbed[j];
    sum += diff * diff;
  }
  return sum;
}

std::vector<double> SubsetL2Distortion::gradient_wrt_perturbed(
    std::span<const double> reference, std::span<const double> perturbed) const {
  std::vector<double> g(perturbed.size(), 0.0);
  for (std::size_t j : indices_) {
    require_label(reference, j, "d_subset_l2");
    require_label(perturbed, j, "d_subset_l2");
    g[j] = -2.0 * (reference[j] - perturbed[j]);
  }
  return g;
}

double d1_presoftmax(std::span<const double> ref, std::span<const double> pert, std::size_t label,
                     double scale) {
  return SquaredScoreDistortion(label, scale).evaluate(ref, pert);
}

double d2_postsoftmax(std::span<const double> ref, std::span<const double> pert,
                      std::size_t label) {
  return SquaredProbabilityDistortion(label).evaluate(ref, pert);
}

double d_subset_l2(std::span<const double> ref, std::span<const double> pert,
                   const std::vector<std::size_t>& indices) {
  return SubsetL2Distortion(indices).evaluate(ref, pert);
}

}  // namespace rde
