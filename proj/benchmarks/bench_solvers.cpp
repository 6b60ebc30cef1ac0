#include <benchmark/benchmark.h>

#include "rde/datasets.hpp"
#include "rde/distortions.hpp"
#include "rde/obfuscations.hpp"
#include "rde/representations.hpp"
#include "rde/solvers.hpp"
#include "rde/wavelet.hpp"

namespace {

using namespace rde;

RdeProblem pixel_problem(std::shared_ptr<const ModelHandle> model, const Signal& image) {
  RdeProblem problem;
  problem.representation = make_identity(image.shape(), 1);
  problem.perturbation = std::make_shared<GaussianAdaptive>(GaussianSpec::Mode::global);
  problem.model = std::move(model);
  problem.distortion = std::make_shared<SquaredScoreDistortion>(0, 100.0);
  problem.clip = ClipRange{0.0, 1.0};
  problem.add_target(image);
  return problem;
}

std::shared_ptr<const ModelHandle> quick_classifier() {
  ModelSpec spec = make_image_classifier(32, 4);
  RngStream rng(11);
  init_params(spec, rng);
  return std::make_shared<NeuralModel>(std::move(spec));
}

void BM_EvaluateMask(benchmark::State& state) {
  const auto corpus = make_shape_corpus(1, 1);
  const RdeProblem problem = pixel_problem(quick_classifier(), corpus[0].image);
  const Mask s = Mask::ones(problem.block_count());
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_mask(problem, s, 1, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_EvaluateMask)->Arg(8)->Arg(64);

void BM_SolveL1Step(benchmark::State& state) {
  const auto corpus = make_shape_corpus(2, 1);
  const RdeProblem problem = pixel_problem(quick_classifier(), corpus[0].image);
  SolverConfig cfg;
  cfg.type = SolverConfig::Type::l1;
  cfg.lambda = 1.0;
  cfg.steps = 1;
  cfg.lr = 0.03;
  cfg.n_samples = 8;
  cfg.eval_samples = 8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_l1(problem, cfg));
  }
}
BENCHMARK(BM_SolveL1Step);

void BM_ConcreteSample(benchmark::State& state) {
  const std::vector<double> theta(static_cast<std::size_t>(state.range(0)), 0.4);
  RngStream rng(13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(concrete_sample(theta, 0.1, rng));
  }
}
BENCHMARK(BM_ConcreteSample)->Arg(128)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
