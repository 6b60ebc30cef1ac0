#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rde/core.hpp"

namespace rde {

enum class LayerType { dense, relu, conv2d, flatten };

/// One layer of a desk-scale network. Dense weights are out x in row-major;
/// conv weights are out_ch x in_ch x k x k row-major with zero padding
/// floor(k/2) on both sides.
struct Layer {
  LayerType type = LayerType::relu;
  std::size_t in = 0, out = 0;                      // dense
  std::size_t in_ch = 0, out_ch = 0, kernel = 0;    // conv2d
  std::size_t stride = 1;                           // conv2d
  std::vector<double> weights;
  std::vector<double> bias;

  static Layer dense(std::size_t in, std::size_t out);
  static Layer relu();
  static Layer conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                      std::size_t stride = 1);
  static Layer flatten();

  std::size_t param_count() const;
};

enum class Task { classification, regression };

struct ModelSpec {
  Task task = Task::classification;
  Shape input_shape;
  std::vector<Layer> layers;

  std::size_t param_count() const;
};

/// Gaussian fan-in initialization for all dense/conv layers.
void init_params(ModelSpec& model, RngStream& rng);

std::vector<double> get_params(const ModelSpec& model);
void set_params(ModelSpec& model, std::span<const double> params);

std::vector<double> forward(const ModelSpec& model, const Signal& x);

/// J^T * cotangent with respect to the input values.
std::vector<double> input_gradient(const ModelSpec& model, const Signal& x,
                                   std::span<const double> cotangent);

/// Input and flattened-parameter gradients for one cotangent.
struct Gradients {
  std::vector<double> input;
  std::vector<double> params;
};
Gradients backprop(const ModelSpec& model, const Signal& x, std::span<const double> cotangent,
                   bool want_param_grads);

/// Model output dimension implied by the layer stack for the input shape.
std::size_t infer_output_dim(const ModelSpec& model);

/// ModelHandle over a ModelSpec.
class NeuralModel final : public ModelHandle {
public:
  explicit NeuralModel(std::shared_ptr<const ModelSpec> spec);
  explicit NeuralModel(ModelSpec spec);

  std::size_t output_dim() const override { return output_dim_; }
  std::vector<double> forward(const Signal& x) const override;
  std::vector<double> input_gradient(const Signal& x,
                                     std::span<const double> cotangent) const override;
  const ModelSpec& spec() const { return *spec_; }

private:
  std::shared_ptr<const ModelSpec> spec_;
  std::size_t output_dim_;
};

/// Bias-corrected Adam. adam_step updates params in place and advances the
/// state; zero gradients leave parameters unchanged.
struct AdamState {
  int t = 0;
  std::vector<double> m, v;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(std::size_t n, double lr);
};

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct TrainExample {
  Signal input;
  int label = -1;               // classification
  std::vector<double> target;   // regression
  bool flagged = false;         // interpretation regularizer applies
  std::vector<std::size_t> region;  // J_x (output indices)
  Signal modified;              // x with the building channel zeroed
};

struct TrainOptions {
  int epochs = 1;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double gamma = 0.0;  // interpretation regularizer weight
};

/// Adam training on the task loss (softmax cross-entropy / squared error),
/// plus gamma * interpretation loss on flagged examples. Deterministic for
/// a fixed seed; throws on non-finite loss.
ModelSpec train_model(ModelSpec model, const std::vector<TrainExample>& data,
                      const TrainOptions& options);

/// || Phi_J(x) - Phi_J(x_tilde) ||_2^2 restricted to output indices J.
double interpretation_loss(const ModelHandle& model, const Signal& x,
                           const std::vector<std::size_t>& region, const Signal& x_tilde);

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
  bool at_kink = false;  // non-smooth point, excluded from pass/fail
  std::string mode;      // "full" or "directional"
};

/// Central-difference check of input_gradient. Small models compare the
/// full Jacobian row per canonical cotangent; larger models probe random
/// directions. Points adjacent to a relu kink are flagged and excluded.
GradCheckReport finite_diff_check(const ModelSpec& model, const Signal& x, double tolerance,
                                  std::uint64_t seed = 0);

}  // namespace rde
