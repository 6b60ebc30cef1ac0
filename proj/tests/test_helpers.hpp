#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "rde/models.hpp"
#include "rde/rng.hpp"
#include "rde/types.hpp"

namespace rde::testing {

inline Signal vec_signal(std::vector<double> values) {
  const std::size_t n = values.size();
  return Signal(std::move(values), Shape::vector(n));
}

inline Signal image_signal(std::vector<double> values, std::size_t height, std::size_t width,
                           std::size_t channels = 1) {
  return Signal(std::move(values), Shape::image(height, width, channels));
}

/// Phi(x) = <w, x> + b as a one-layer dense model.
inline std::shared_ptr<const ModelHandle> linear_model(const std::vector<double>& w,
                                                       double b = 0.0) {
  ModelSpec spec;
  spec.task = Task::regression;
  spec.input_shape = Shape::vector(w.size());
  Layer layer = Layer::dense(w.size(), 1);
  layer.weights = w;
  layer.bias = {b};
  spec.layers.push_back(std::move(layer));
  return std::make_shared<NeuralModel>(std::move(spec));
}

inline double rel_l2_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    diff += d * d;
    ref += a[i] * a[i];
  }
  if (ref == 0.0) return std::sqrt(diff);
  return std::sqrt(diff / ref);
}

inline std::vector<double> random_vector(std::size_t n, RngStream& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.gaussian();
  return v;
}

}  // namespace rde::testing
