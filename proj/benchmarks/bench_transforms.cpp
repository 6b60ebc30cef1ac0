#include <benchmark/benchmark.h>

#include "rde/fourier.hpp"
#include "rde/representations.hpp"
#include "rde/rng.hpp"
#include "rde/wavelet.hpp"

namespace {

using namespace rde;

Signal random_image(std::size_t side, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> v(side * side);
  for (double& x : v) x = rng.uniform();
  return Signal(std::move(v), Shape::image(side, side, 1));
}

void BM_DwtForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const WaveletSpec spec{3, dwt_max_levels(side, side)};
  auto rep = make_dwt2d(Shape::image(side, side, 1), spec);
  const Signal x = random_image(side, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rep->analyze(x));
  }
}
BENCHMARK(BM_DwtForward)->Arg(32)->Arg(64);

void BM_DwtInverse(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const WaveletSpec spec{3, dwt_max_levels(side, side)};
  auto rep = make_dwt2d(Shape::image(side, side, 1), spec);
  const CoefficientVector h = rep->analyze(random_image(side, 2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rep->synthesize(h));
  }
}
BENCHMARK(BM_DwtInverse)->Arg(32)->Arg(64);

void BM_DftForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream rng(3);
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian();
  const Signal x(std::move(v), Shape::vector(n));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dft_forward(x));
  }
}
// 333 exercises the direct non-power-of-two path.
BENCHMARK(BM_DftForward)->Arg(128)->Arg(1024)->Arg(333);

void BM_FourierSplitSynthesize(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto rep = make_fourier_split(n);
  RngStream rng(4);
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian();
  const CoefficientVector h = rep->analyze(Signal(std::move(v), Shape::vector(n)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rep->synthesize(h));
  }
}
BENCHMARK(BM_FourierSplitSynthesize)->Arg(128)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
