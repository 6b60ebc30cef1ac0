#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "rde/core.hpp"

namespace rde {

struct SolverConfig {
  enum class Type { l1, bernoulli, pursuit, exhaustive };

  Type type = Type::l1;
  double lambda = 0.6;      // l1 / bernoulli sparsity weight
  int steps = 2000;         // iterative solvers
  double lr = 0.003;
  int n_samples = 64;       // Monte-Carlo samples per optimization step
  double temperature = 0.1; // concrete relaxation
  std::size_t budget = 1;   // sparsity level for pursuit / exhaustive
  double tolerance = 0.0;   // pursuit stop threshold
  std::uint64_t seed = 0;
  std::uint64_t eval_seed = 1;
  int eval_samples = 0;     // 0 -> n_samples

  int effective_eval_samples() const { return eval_samples > 0 ? eval_samples : n_samples; }
};

/// One explanation target: a signal, its coefficients, and the cached
/// reference output Phi(x).
struct RdeTarget {
  Signal x;
  CoefficientVector h;
  std::vector<double> reference;
};

/// A mask-optimization problem. Multiple targets average the objective
/// (class-level queries); most problems have exactly one.
struct RdeProblem {
  std::vector<RdeTarget> targets;
  std::shared_ptr<const RepresentationSystem> representation;
  std::shared_ptr<const PerturbationDistribution> perturbation;
  std::shared_ptr<const ModelHandle> model;
  std::shared_ptr<const DistortionMeasure> distortion;
  std::optional<ClipRange> clip;

  std::size_t block_count() const { return representation->block_count(); }

  /// Analyze x through the representation and cache the reference output.
  void add_target(Signal x);
  /// Use precomputed coefficients (representations without analysis).
  void add_target(Signal x, CoefficientVector h);
};

struct ExplanationResult {
  Mask mask;       // final mask (theta for the bernoulli solver)
  Mask hard_mask;  // mask thresholded at 0.5
  std::vector<double> objective_trace;
  DistortionEstimate distortion;  // on the evaluation sample set
  double l1_normalized = 0.0;
  double wall_clock_seconds = 0.0;
  std::vector<std::size_t> selection_order;  // pursuit only
  SolverConfig config;
};

/// Mean distortion of mask s over the problem's targets on the sample set
/// derived from (seed, n_samples); the workhorse shared by all solvers.
DistortionEstimate evaluate_mask(const RdeProblem& problem, const Mask& s, std::uint64_t seed,
                                 int n_samples);

/// Projected Adam on s in [0,1]^k minimizing the Monte-Carlo estimate of
/// D + lambda ||s||_1, initialized at the all-ones mask; returns the best
/// iterate under the fixed evaluation sample set.
ExplanationResult solve_l1(const RdeProblem& problem, const SolverConfig& config);

/// Deterministic part of the binary-concrete relaxation:
/// sigmoid((logit(theta) + noise) / temperature), with theta clipped to
/// [1e-6, 1 - 1e-6] and the output clamped strictly inside (0,1).
double concrete_transform(double theta, double logistic_noise, double temperature);

/// Binary-concrete relaxation sample: concrete_transform applied with i.i.d.
/// standard-logistic noise per coordinate.
Mask concrete_sample(const std::vector<double>& theta, double temperature, RngStream& rng);

/// Adam on Bernoulli parameters theta with reparameterized concrete
/// samples; the l1 penalty acts on theta (the exact Bernoulli expectation
/// of ||s||_1).
ExplanationResult solve_bernoulli(const RdeProblem& problem, const SolverConfig& config);

/// Greedy selection: repeatedly adds the coordinate that minimizes the
/// evaluated distortion (ties to the lowest index) until the distortion
/// drops to the tolerance or the budget is exhausted.
ExplanationResult matching_pursuit(const RdeProblem& problem, const SolverConfig& config);

struct OracleResult {
  Mask mask;
  double distortion = 0.0;
};

/// Enumerates every binary mask with ||s||_0 <= budget (k <= 20) on the
/// fixed evaluation sample set; ties resolve to the lexicographically
/// smallest mask.
OracleResult exhaustive_oracle(const RdeProblem& problem, std::size_t budget,
                               std::uint64_t eval_seed, int eval_samples);

struct RdPoint {
  double sweep_value = 0.0;
  double l1_normalized = 0.0;
  double distortion_mean = 0.0;
  double distortion_stderr = 0.0;
  ExplanationResult result;
};

/// One solver run per sweep value (lambda for l1/bernoulli, budget for
/// pursuit/exhaustive) with per-point optimization seeds derived from the
/// base seed and a shared evaluation seed.
std::vector<RdPoint> rd_curve(const RdeProblem& problem, const SolverConfig& base,
                              const std::vector<double>& sweep);

}  // namespace rde
