#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "rde/core.hpp"
#include "rde/distortions.hpp"
#include "rde/obfuscations.hpp"
#include "rde/representations.hpp"
#include "test_helpers.hpp"

using namespace rde;
using namespace rde::testing;

TEST_CASE("obfuscate: all-ones mask reproduces f(h) bit-identically") {
  auto rep = make_identity(Shape::vector(5));
  RngStream rng(3);
  CoefficientVector h(random_vector(5, rng), {1, 1, 1, 1, 1});
  CoefficientVector v(random_vector(5, rng), {1, 1, 1, 1, 1});
  const Signal y = obfuscate(h, Mask::ones(5), v, *rep);
  const Signal fh = rep->synthesize(h);
  for (std::size_t i = 0; i < 5; ++i) CHECK(y[i] == fh[i]);
}

TEST_CASE("obfuscate: all-zeros mask is full replacement") {
  auto rep = make_identity(Shape::vector(4));
  RngStream rng(4);
  CoefficientVector h(random_vector(4, rng), {1, 1, 1, 1});
  CoefficientVector v(random_vector(4, rng), {1, 1, 1, 1});
  const Signal y = obfuscate(h, Mask::zeros(4), v, *rep);
  const Signal fv = rep->synthesize(v);
  for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == fv[i]);
}

TEST_CASE("obfuscate: block selection") {
  auto rep = make_identity(Shape::vector(2));
  const CoefficientVector h = CoefficientVector::from_blocks({{2.0}, {4.0}});
  const CoefficientVector v = CoefficientVector::from_blocks({{0.0}, {0.0}});
  const Signal y = obfuscate(h, Mask({1.0, 0.0}), v, *rep);
  CHECK(y[0] == 2.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("obfuscate: clipping applies when configured") {
  auto rep = make_identity(Shape::vector(2));
  const CoefficientVector h = CoefficientVector::from_blocks({{2.0}, {-1.0}});
  const CoefficientVector v = CoefficientVector::from_blocks({{0.0}, {0.0}});
  const Signal y = obfuscate(h, Mask::ones(2), v, *rep, ClipRange{0.0, 1.0});
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("obfuscate: structure mismatch names the offending block") {
  auto rep = make_identity(Shape::vector(2));
  const CoefficientVector h = CoefficientVector::from_blocks({{1.0}, {2.0}});
  const CoefficientVector bad = CoefficientVector::from_blocks({{1.0}, {2.0, 3.0}});
  CHECK_THROWS_WITH_AS(obfuscate(h, Mask::ones(2), bad, *rep), doctest::Contains("block 1"),
                       Error);
}

TEST_CASE("expected_distortion: identity mask gives zero mean and stderr") {
  auto rep = make_identity(Shape::vector(3));
  auto model = linear_model({1.0, 2.0, 3.0});
  const Signal x = vec_signal({1.0, 1.0, 1.0});
  const CoefficientVector h = rep->analyze(x);
  GaussianAdaptive noise(GaussianSpec::Mode::global);
  SubsetL2Distortion d3 = SubsetL2Distortion::full(1);
  const DistortionEstimate est =
      expected_distortion(x, h, Mask::ones(3), noise, *rep, *model, d3, 16, 7);
  CHECK(est.mean == 0.0);
  CHECK(est.std_error == 0.0);
  CHECK(est.n_samples == 16);
}

TEST_CASE("expected_distortion: deterministic distribution gives zero stderr") {
  auto rep = make_identity(Shape::vector(3));
  auto model = linear_model({1.0, 2.0, 3.0});
  const Signal x = vec_signal({1.0, 1.0, 1.0});
  const CoefficientVector h = rep->analyze(x);
  ConstantPerturbation zero(0.0);
  SubsetL2Distortion d3 = SubsetL2Distortion::full(1);
  const Mask s({0.0, 1.0, 1.0});
  const DistortionEstimate est = expected_distortion(x, h, s, zero, *rep, *model, d3, 8, 7);
  // Dropping block 0 removes w_0 x_0 = 1 from the output.
  CHECK(est.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.std_error == 0.0);
}

TEST_CASE("expected_distortion: matches an independently recomputed Monte-Carlo average") {
  auto rep = make_identity(Shape::vector(3));
  auto model = linear_model({0.5, -1.0, 2.0});
  const Signal x = vec_signal({0.2, 0.4, 0.6});
  const CoefficientVector h = rep->analyze(x);
  GaussianAdaptive noise(GaussianSpec::Mode::global);
  SubsetL2Distortion d3 = SubsetL2Distortion::full(1);
  const Mask s({0.3, 0.9, 0.0});
  const std::uint64_t seed = 99;
  const int n = 32;
  const DistortionEstimate est = expected_distortion(x, h, s, noise, *rep, *model, d3, n, seed);

  const std::vector<double> ref = model->forward(x);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    RngStream rng = RngStream::substream(seed, static_cast<std::uint64_t>(i));
    const CoefficientVector v = noise.sample(h, s, rng);
    const Signal y = obfuscate(h, s, v, *rep);
    sum += d3.evaluate(ref, model->forward(y));
  }
  CHECK(est.mean == doctest::Approx(sum / n).epsilon(1e-12));
}

TEST_CASE("expected_distortion: deterministic under a fixed seed") {
  auto rep = make_identity(Shape::vector(4));
  auto model = linear_model({1.0, -1.0, 0.5, 2.0});
  RngStream rng(11);
  const Signal x = vec_signal(random_vector(4, rng));
  const CoefficientVector h = rep->analyze(x);
  GaussianAdaptive noise(GaussianSpec::Mode::global);
  SubsetL2Distortion d3 = SubsetL2Distortion::full(1);
  const Mask s({0.5, 0.5, 0.5, 0.5});
  const DistortionEstimate a = expected_distortion(x, h, s, noise, *rep, *model, d3, 12, 123);
  const DistortionEstimate b = expected_distortion(x, h, s, noise, *rep, *model, d3, 12, 123);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("expected_distortion: insensitive block does not change the mean") {
  // w_1 = 0 and a deterministic replacement: flipping s_1 changes nothing.
  auto rep = make_identity(Shape::vector(3));
  auto model = linear_model({2.0, 0.0, 1.0});
  const Signal x = vec_signal({1.0, 5.0, 1.0});
  const CoefficientVector h = rep->analyze(x);
  ConstantPerturbation zero(0.0);
  SubsetL2Distortion d3 = SubsetL2Distortion::full(1);
  const DistortionEstimate with_block =
      expected_distortion(x, h, Mask({1.0, 1.0, 0.0}), zero, *rep, *model, d3, 4, 5);
  const DistortionEstimate without_block =
      expected_distortion(x, h, Mask({1.0, 0.0, 0.0}), zero, *rep, *model, d3, 4, 5);
  CHECK(with_block.mean == doctest::Approx(without_block.mean).epsilon(1e-15));
}

TEST_CASE("expected_distortion: non-finite distortion reports the sample index") {
  // Weights large enough that the squared residual overflows to infinity.
  auto rep = make_identity(Shape::vector(1));
  auto model = linear_model({1e200});
  const Signal x = vec_signal({1e100});
  const CoefficientVector h = rep->analyze(x);
  ConstantPerturbation zero(0.0);
  SubsetL2Distortion d3 = SubsetL2Distortion::full(1);
  CHECK_THROWS_WITH_AS(
      expected_distortion(x, h, Mask::zeros(1), zero, *rep, *model, d3, 2, 1),
      doctest::Contains("sample 0"), Error);
}

TEST_CASE("objective_l1 examples and monotonicity") {
  CHECK(objective_l1(0.0, Mask::zeros(3), 0.6) == 0.0);
  CHECK(objective_l1(1.0, Mask({1.0, 1.0}), 0.5) == doctest::Approx(2.0));
  CHECK(objective_l1(0.25, Mask({0.5, 0.25, 0.0}), 0.6) == doctest::Approx(0.70));

  const double base = objective_l1(0.4, Mask({0.2, 0.3}), 0.7);
  CHECK(objective_l1(0.4, Mask({0.25, 0.3}), 0.7) >= base);
  CHECK(objective_l1(0.4, Mask({0.2, 0.35}), 0.7) >= base);
}

TEST_CASE("mask invariants") {
  CHECK_THROWS_AS(Mask({1.2}), Error);
  CHECK_THROWS_AS(Mask({-0.1}), Error);
  const Mask m({0.0, 1.0, 0.5});
  CHECK_FALSE(m.is_binary());
  CHECK(Mask({0.0, 1.0}).is_binary());
  CHECK(m.sparsity_l0() == 2);
  CHECK(m.sparsity_l1() == doctest::Approx(1.5));
}

TEST_CASE("coefficient vector structure checks") {
  CHECK_THROWS_AS(CoefficientVector({}, {}), Error);
  const CoefficientVector h = CoefficientVector::from_blocks({{1.0, 2.0}, {3.0}});
  CHECK(h.block_count() == 2);
  CHECK(h.block_dim(0) == 2);
  CHECK(h.block(1)[0] == 3.0);
  CHECK_THROWS_AS(CoefficientVector({1.0, std::numeric_limits<double>::quiet_NaN()}, {1, 1}),
                  Error);
}

TEST_CASE("signal invariants") {
  CHECK_THROWS_AS(Signal({1.0, 2.0}, Shape::vector(3)), Error);
  CHECK_THROWS_AS(Signal({std::numeric_limits<double>::infinity()}, Shape::vector(1)), Error);
  const Signal composite({1.0, 2.0, 3.0, 4.0},
                         Shape::composite({{"a", {2}}, {"b", {2}}}));
  CHECK(composite.part("b")[0] == 3.0);
  CHECK(composite.shape().part_offset("b") == 2);
}
