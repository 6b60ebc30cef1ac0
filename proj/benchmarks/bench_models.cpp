#include <benchmark/benchmark.h>

#include "rde/datasets.hpp"
#include "rde/models.hpp"

namespace {

using namespace rde;

Signal random_input(const Shape& shape, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> v(shape.value_count());
  for (double& x : v) x = rng.uniform();
  return Signal(std::move(v), shape);
}

void BM_ClassifierForward(benchmark::State& state) {
  ModelSpec spec = make_image_classifier(32, 4);
  RngStream rng(1);
  init_params(spec, rng);
  const Signal x = random_input(spec.input_shape, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(spec, x));
  }
}
BENCHMARK(BM_ClassifierForward);

void BM_ClassifierInputGradient(benchmark::State& state) {
  ModelSpec spec = make_image_classifier(32, 4);
  RngStream rng(3);
  init_params(spec, rng);
  const Signal x = random_input(spec.input_shape, 4);
  const std::vector<double> cot = {1.0, 0.0, 0.0, 0.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(input_gradient(spec, x, cot));
  }
}
BENCHMARK(BM_ClassifierInputGradient);

void BM_RadioRegressorForward(benchmark::State& state) {
  ModelSpec spec = make_radio_regressor(32, 8);
  RngStream rng(5);
  init_params(spec, rng);
  const Signal x = random_input(spec.input_shape, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(spec, x));
  }
}
BENCHMARK(BM_RadioRegressorForward);

void BM_TrainStep(benchmark::State& state) {
  ModelSpec spec = make_image_classifier(32, 4);
  RngStream rng(7);
  init_params(spec, rng);
  std::vector<TrainExample> data(1);
  data[0].input = random_input(spec.input_shape, 8);
  data[0].label = 1;
  TrainOptions opt;
  opt.epochs = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_model(spec, data, opt));
  }
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
