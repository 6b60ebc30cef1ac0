#include "rde/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "rde/models.hpp"

namespace rde {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

void check_problem(const RdeProblem& problem) {
  if (problem.targets.empty()) fail("solver: problem has no targets");
  if (!problem.representation || !problem.perturbation || !problem.model || !problem.distortion) {
    fail("solver: problem is missing a component");
  }
}

std::uint64_t opt_index(const RdeProblem& problem, int step, std::size_t target, int sample,
                        int n_samples) {
  const std::uint64_t per_step =
      static_cast<std::uint64_t>(problem.targets.size()) * static_cast<std::uint64_t>(n_samples);
  return static_cast<std::uint64_t>(step) * per_step +
         target * static_cast<std::uint64_t>(n_samples) + static_cast<std::uint64_t>(sample);
}

std::uint64_t eval_index(std::size_t target, int sample, int n_samples) {
  return target * static_cast<std::uint64_t>(n_samples) + static_cast<std::uint64_t>(sample);
}

// Distortion of one obfuscation drawn from the given substream.
double sample_distortion(const RdeProblem& problem, const RdeTarget& target, const Mask& s,
                         RngStream& rng) {
  const CoefficientVector v = problem.perturbation->sample(target.h, s, rng);
  const Signal y = obfuscate(target.h, s, v, *problem.representation, problem.clip);
  const std::vector<double> out = problem.model->forward(y);
  return problem.distortion->evaluate(target.reference, out);
}

DistortionEstimate pooled_estimate(const std::vector<double>& draws) {
  DistortionEstimate est;
  est.n_samples = static_cast<int>(draws.size());
  double sum = 0.0;
  for (double d : draws) sum += d;
  est.mean = sum / static_cast<double>(draws.size());
  if (draws.size() > 1) {
    double sq = 0.0;
    for (double d : draws) {
      const double delta = d - est.mean;
      sq += delta * delta;
    }
    est.std_error = std::sqrt(sq / (static_cast<double>(draws.size()) *
                                    static_cast<double>(draws.size() - 1)));
  }
  return est;
}

// Accumulates the distortion gradient with respect to the mask for one
// sample: d/ds_j = sum_c vjp[j][c] * (h[j][c] - v[j][c]), with pass-through
// gradients over the clip.
void accumulate_mask_gradient(const RdeProblem& problem, const RdeTarget& target, const Mask& s,
                              const CoefficientVector& v, std::vector<double>& grad,
                              double& objective_sum) {
  const CoefficientVector u = mix_coefficients(target.h, s, v);
  Signal y = problem.representation->synthesize(u);
  if (problem.clip) {
    std::vector<double> values = y.values();
    for (double& val : values) val = std::clamp(val, problem.clip->lo, problem.clip->hi);
    y = Signal(std::move(values), y.shape());
  }
  const std::vector<double> out = problem.model->forward(y);
  objective_sum += problem.distortion->evaluate(target.reference, out);

  const std::vector<double> dcot = problem.distortion->gradient_wrt_perturbed(target.reference, out);
  const std::vector<double> gsignal = problem.model->input_gradient(y, dcot);
  const CoefficientVector gcoef = problem.representation->synthesize_vjp(u, gsignal);
  for (std::size_t j = 0; j < grad.size(); ++j) {
    const auto gb = gcoef.block(j);
    const auto hb = target.h.block(j);
    const auto vb = v.block(j);
    double acc = 0.0;
    for (std::size_t c = 0; c < gb.size(); ++c) acc += gb[c] * (hb[c] - vb[c]);
    grad[j] += acc;
  }
}

Mask clip_to_mask(const std::vector<double>& raw) {
  std::vector<double> values(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) values[i] = std::clamp(raw[i], 0.0, 1.0);
  return Mask(std::move(values));
}

struct BestIterate {
  double objective = 0.0;
  std::vector<double> values;

  void consider(double obj, const std::vector<double>& candidate, bool first) {
    if (first || obj < objective) {
      objective = obj;
      values = candidate;
    }
  }
};

}  // namespace

void RdeProblem::add_target(Signal x) {
  RdeTarget target;
  target.h = representation->analyze(x);
  target.reference = model->forward(x);
  target.x = std::move(x);
  targets.push_back(std::move(target));
}

void RdeProblem::add_target(Signal x, CoefficientVector h) {
  RdeTarget target;
  target.h = std::move(h);
  target.reference = model->forward(x);
  target.x = std::move(x);
  targets.push_back(std::move(target));
}

DistortionEstimate evaluate_mask(const RdeProblem& problem, const Mask& s, std::uint64_t seed,
                                 int n_samples) {
  check_problem(problem);
  if (n_samples < 1) fail("evaluate_mask: n_samples must be >= 1");
  std::vector<double> draws;
  draws.reserve(problem.targets.size() * static_cast<std::size_t>(n_samples));
  for (std::size_t t = 0; t < problem.targets.size(); ++t) {
    for (int i = 0; i < n_samples; ++i) {
      RngStream rng = RngStream::substream(seed, eval_index(t, i, n_samples));
      const double d = sample_distortion(problem, problem.targets[t], s, rng);
      if (!std::isfinite(d)) {
        std::ostringstream os;
        os << "evaluate_mask: non-finite distortion at target " << t << " sample " << i;
        fail(os.str());
      }
      draws.push_back(d);
    }
  }
  return pooled_estimate(draws);
}

ExplanationResult solve_l1(const RdeProblem& problem, const SolverConfig& config) {
  check_problem(problem);
  if (config.type != SolverConfig::Type::l1) fail("solve_l1: config.type must be l1");
  if (config.lambda <= 0.0) fail("solve_l1: lambda must be positive");
  if (config.steps < 0) fail("solve_l1: steps must be >= 0");
  const auto start = clock_type::now();

  const std::size_t k = problem.block_count();
  const int eval_n = config.effective_eval_samples();
  std::vector<double> s_values(k, 1.0);

  auto eval_objective = [&](const std::vector<double>& raw) {
    const Mask m = clip_to_mask(raw);
    return evaluate_mask(problem, m, config.eval_seed, eval_n).mean +
           config.lambda * m.sparsity_l1();
  };

  BestIterate best;
  best.consider(eval_objective(s_values), s_values, true);

  AdamState adam = AdamState::init(k, config.lr);
  const double norm = 1.0 / (static_cast<double>(problem.targets.size()) *
                             static_cast<double>(config.n_samples));
  ExplanationResult result;
  result.objective_trace.reserve(static_cast<std::size_t>(config.steps));

  for (int step = 0; step < config.steps; ++step) {
    const Mask s = clip_to_mask(s_values);
    std::vector<double> grad(k, 0.0);
    double obj_sum = 0.0;
    for (std::size_t t = 0; t < problem.targets.size(); ++t) {
      for (int i = 0; i < config.n_samples; ++i) {
        RngStream rng =
            RngStream::substream(config.seed, opt_index(problem, step, t, i, config.n_samples));
        const CoefficientVector v = problem.perturbation->sample(problem.targets[t].h, s, rng);
        accumulate_mask_gradient(problem, problem.targets[t], s, v, grad, obj_sum);
      }
    }
    if (!std::isfinite(obj_sum)) {
      std::ostringstream os;
      os << "solve_l1: non-finite objective at step " << step;
      fail(os.str());
    }
    for (std::size_t j = 0; j < k; ++j) grad[j] = grad[j] * norm + config.lambda;
    adam_step(adam, s_values, grad);
    for (double& sv : s_values) sv = std::clamp(sv, 0.0, 1.0);

    const double eval_obj = eval_objective(s_values);
    result.objective_trace.push_back(eval_obj);
    best.consider(eval_obj, s_values, false);
  }

  result.mask = clip_to_mask(best.values);
  std::vector<double> hard(k);
  for (std::size_t j = 0; j < k; ++j) hard[j] = result.mask[j] > 0.5 ? 1.0 : 0.0;
  result.hard_mask = Mask(std::move(hard));
  result.distortion = evaluate_mask(problem, result.mask, config.eval_seed, eval_n);
  result.l1_normalized = result.mask.sparsity_l1() / static_cast<double>(k);
  result.config = config;
  result.wall_clock_seconds = seconds_since(start);
  return result;
}

double concrete_transform(double theta, double logistic_noise, double temperature) {
  if (temperature <= 0.0) fail("concrete_transform: temperature must be positive");
  const double p = std::clamp(theta, 1e-6, 1.0 - 1e-6);
  const double logit = std::log(p / (1.0 - p));
  const double raw = 1.0 / (1.0 + std::exp(-(logit + logistic_noise) / temperature));
  return std::clamp(raw, 1e-12, 1.0 - 1e-12);
}

Mask concrete_sample(const std::vector<double>& theta, double temperature, RngStream& rng) {
  std::vector<double> s(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    s[i] = concrete_transform(theta[i], rng.logistic(), temperature);
  }
  return Mask(std::move(s));
}

ExplanationResult solve_bernoulli(const RdeProblem& problem, const SolverConfig& config) {
  check_problem(problem);
  if (config.type != SolverConfig::Type::bernoulli) {
    fail("solve_bernoulli: config.type must be bernoulli");
  }
  if (config.lambda <= 0.0) fail("solve_bernoulli: lambda must be positive");
  if (config.temperature <= 0.0) fail("solve_bernoulli: temperature must be positive");
  const auto start = clock_type::now();

  const std::size_t k = problem.block_count();
  const int eval_n = config.effective_eval_samples();
  std::vector<double> theta(k, 0.5);

  // Expected objective under the concrete relaxation, on the evaluation
  // sample set (concrete noise and perturbations share the substream).
  auto eval_objective = [&](const std::vector<double>& th) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t t = 0; t < problem.targets.size(); ++t) {
      for (int i = 0; i < eval_n; ++i) {
        RngStream rng = RngStream::substream(config.eval_seed, eval_index(t, i, eval_n));
        const Mask s = concrete_sample(th, config.temperature, rng);
        sum += sample_distortion(problem, problem.targets[t], s, rng);
        ++count;
      }
    }
    double l1 = 0.0;
    for (double v : th) l1 += v;
    return sum / count + config.lambda * l1;
  };

  BestIterate best;
  best.consider(eval_objective(theta), theta, true);

  AdamState adam = AdamState::init(k, config.lr);
  const double norm = 1.0 / (static_cast<double>(problem.targets.size()) *
                             static_cast<double>(config.n_samples));
  ExplanationResult result;
  result.objective_trace.reserve(static_cast<std::size_t>(config.steps));

  for (int step = 0; step < config.steps; ++step) {
    std::vector<double> grad(k, 0.0);
    double obj_sum = 0.0;
    for (std::size_t t = 0; t < problem.targets.size(); ++t) {
      for (int i = 0; i < config.n_samples; ++i) {
        RngStream rng =
            RngStream::substream(config.seed, opt_index(problem, step, t, i, config.n_samples));
        const Mask s = concrete_sample(theta, config.temperature, rng);
        const CoefficientVector v = problem.perturbation->sample(problem.targets[t].h, s, rng);
        std::vector<double> grad_s(k, 0.0);
        accumulate_mask_gradient(problem, problem.targets[t], s, v, grad_s, obj_sum);
        // Reparameterized chain: ds/dtheta = s(1-s) / (t * p(1-p)).
        for (std::size_t j = 0; j < k; ++j) {
          const double p = std::clamp(theta[j], 1e-6, 1.0 - 1e-6);
          const double sj = s[j];
          grad[j] += grad_s[j] * sj * (1.0 - sj) / (config.temperature * p * (1.0 - p));
        }
      }
    }
    if (!std::isfinite(obj_sum)) {
      std::ostringstream os;
      os << "solve_bernoulli: non-finite objective at step " << step;
      fail(os.str());
    }
    for (std::size_t j = 0; j < k; ++j) grad[j] = grad[j] * norm + config.lambda;
    adam_step(adam, theta, grad);
    for (double& th : theta) th = std::clamp(th, 0.0, 1.0);

    const double eval_obj = eval_objective(theta);
    result.objective_trace.push_back(eval_obj);
    best.consider(eval_obj, theta, false);
  }

  result.mask = clip_to_mask(best.values);
  std::vector<double> hard(k);
  for (std::size_t j = 0; j < k; ++j) hard[j] = result.mask[j] > 0.5 ? 1.0 : 0.0;
  result.hard_mask = Mask(std::move(hard));
  // Reported distortion samples the concrete relaxation at the final theta.
  {
    std::vector<double> draws;
    draws.reserve(problem.targets.size() * static_cast<std::size_t>(eval_n));
    for (std::size_t t = 0; t < problem.targets.size(); ++t) {
      for (int i = 0; i < eval_n; ++i) {
        RngStream rng = RngStream::substream(config.eval_seed, eval_index(t, i, eval_n));
        const Mask s = concrete_sample(best.values, config.temperature, rng);
        draws.push_back(sample_distortion(problem, problem.targets[t], s, rng));
      }
    }
    result.distortion = pooled_estimate(draws);
  }
  result.l1_normalized = result.mask.sparsity_l1() / static_cast<double>(k);
  result.config = config;
  result.wall_clock_seconds = seconds_since(start);
  return result;
}

ExplanationResult matching_pursuit(const RdeProblem& problem, const SolverConfig& config) {
  check_problem(problem);
  if (config.type != SolverConfig::Type::pursuit) fail("matching_pursuit: config.type must be pursuit");
  const std::size_t k = problem.block_count();
  if (config.budget > k) fail("matching_pursuit: budget exceeds block count");
  const auto start = clock_type::now();
  const int eval_n = config.effective_eval_samples();

  ExplanationResult result;
  std::vector<double> s_values(k, 0.0);
  double current = evaluate_mask(problem, Mask::zeros(k), config.eval_seed, eval_n).mean;

  while (result.selection_order.size() < config.budget && current > config.tolerance) {
    std::size_t best_j = k;
    double best_d = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (s_values[j] != 0.0) continue;
      s_values[j] = 1.0;
      const double d = evaluate_mask(problem, Mask(s_values), config.eval_seed, eval_n).mean;
      s_values[j] = 0.0;
      if (best_j == k || d < best_d) {
        best_j = j;
        best_d = d;
      }
    }
    if (best_j == k) break;
    s_values[best_j] = 1.0;
    result.selection_order.push_back(best_j);
    current = best_d;
    result.objective_trace.push_back(current);
  }

  result.mask = Mask(s_values);
  result.hard_mask = result.mask;
  result.distortion = evaluate_mask(problem, result.mask, config.eval_seed, eval_n);
  result.l1_normalized = result.mask.sparsity_l1() / static_cast<double>(k);
  result.config = config;
  result.wall_clock_seconds = seconds_since(start);
  return result;
}

OracleResult exhaustive_oracle(const RdeProblem& problem, std::size_t budget,
                               std::uint64_t eval_seed, int eval_samples) {
  check_problem(problem);
  const std::size_t k = problem.block_count();
  if (k > 20) {
    std::ostringstream os;
    os << "exhaustive_oracle: k = " << k << " exceeds the enumeration guard (20)";
    fail(os.str());
  }
  OracleResult best;
  bool have_best = false;
  std::vector<double> values(k, 0.0);
  const std::uint64_t total = 1ULL << k;
  for (std::uint64_t code = 0; code < total; ++code) {
    // Lexicographic order over (s_1, ..., s_k): s_1 is the most significant bit.
    const auto ones = static_cast<std::size_t>(__builtin_popcountll(code));
    if (ones > budget) continue;
    for (std::size_t j = 0; j < k; ++j) {
      values[j] = (code >> (k - 1 - j)) & 1ULL ? 1.0 : 0.0;
    }
    Mask mask(values);
    const double d = evaluate_mask(problem, mask, eval_seed, eval_samples).mean;
    if (!have_best || d < best.distortion) {
      best.mask = std::move(mask);
      best.distortion = d;
      have_best = true;
    }
  }
  return best;
}

std::vector<RdPoint> rd_curve(const RdeProblem& problem, const SolverConfig& base,
                              const std::vector<double>& sweep) {
  if (sweep.empty()) fail("rd_curve: sweep must be non-empty");
  std::vector<RdPoint> points;
  points.reserve(sweep.size());
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    SolverConfig cfg = base;
    cfg.seed = RngStream::substream(base.seed, i).next_u64();
    RdPoint point;
    point.sweep_value = sweep[i];
    switch (base.type) {
      case SolverConfig::Type::l1:
        cfg.lambda = sweep[i];
        point.result = solve_l1(problem, cfg);
        break;
      case SolverConfig::Type::bernoulli:
        cfg.lambda = sweep[i];
        point.result = solve_bernoulli(problem, cfg);
        break;
      case SolverConfig::Type::pursuit:
        cfg.budget = static_cast<std::size_t>(sweep[i]);
        point.result = matching_pursuit(problem, cfg);
        break;
      case SolverConfig::Type::exhaustive: {
        const OracleResult oracle = exhaustive_oracle(problem, static_cast<std::size_t>(sweep[i]),
                                                      base.eval_seed,
                                                      base.effective_eval_samples());
        point.result.mask = oracle.mask;
        point.result.hard_mask = oracle.mask;
        point.result.distortion =
            evaluate_mask(problem, oracle.mask, base.eval_seed, base.effective_eval_samples());
        point.result.l1_normalized =
            oracle.mask.sparsity_l1() / static_cast<double>(oracle.mask.size());
        point.result.config = cfg;
        break;
      }
    }
    point.l1_normalized = point.result.l1_normalized;
    point.distortion_mean = point.result.distortion.mean;
    point.distortion_stderr = point.result.distortion.std_error;
    points.push_back(std::move(point));
  }
  return points;
}

}  // namespace rde
