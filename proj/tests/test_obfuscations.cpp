#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "rde/core.hpp"
#include "rde/obfuscations.hpp"
#include "rde/representations.hpp"
#include "rde/wavelet.hpp"
#include "test_helpers.hpp"

using namespace rde;
using namespace rde::testing;

TEST_CASE("constant perturbation fills every block") {
  const CoefficientVector h = CoefficientVector::from_blocks({{5.0}, {1.0, 2.0}});
  const CoefficientVector v = sample_constant(h, 1.0);
  CHECK(v.block(0)[0] == 1.0);
  CHECK(v.block(1)[0] == 1.0);
  CHECK(v.block(1)[1] == 1.0);
  CHECK(v.same_structure(h));

  const CoefficientVector zeros = sample_constant(h, 0.0);
  for (double x : zeros.values()) CHECK(x == 0.0);
}

TEST_CASE("all-ones mask overrides any constant perturbation") {
  auto rep = make_identity(Shape::vector(3));
  const CoefficientVector h = CoefficientVector::from_blocks({{1.0}, {2.0}, {3.0}});
  ConstantPerturbation c(123.0);
  RngStream rng(1);
  const CoefficientVector v = c.sample(h, Mask::ones(3), rng);
  const Signal y = obfuscate(h, Mask::ones(3), v, *rep);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 2.0);
  CHECK(y[2] == 3.0);
}

TEST_CASE("fixed gaussian: matches its stated parameters") {
  GaussianPerturbation dist(0.3, 0.1);
  const CoefficientVector h(std::vector<double>(500, 9.0), std::vector<std::size_t>(500, 1));
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (int i = 0; i < 200; ++i) {
    RngStream rng = RngStream::substream(12, static_cast<std::uint64_t>(i));
    const CoefficientVector v = dist.sample(h, Mask::zeros(500), rng);
    CHECK(v.same_structure(h));
    for (double x : v.values()) {
      sum += x;
      sq += x * x;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  const double std = std::sqrt(sq / static_cast<double>(count) - mean * mean);
  CHECK(std::abs(mean - 0.3) < 0.002);
  CHECK(std::abs(std - 0.1) < 0.002);
  CHECK_THROWS_AS(GaussianPerturbation(0.0, -1.0), Error);
}

TEST_CASE("baseline inpainter: mixed block dims are rejected") {
  const CoefficientVector h = CoefficientVector::from_blocks({{1.0}, {2.0, 3.0}});
  RngStream rng(13);
  CHECK_THROWS_AS(BaselineInpainter(0.0).sample(h, Mask::ones(2), rng), Error);
}

TEST_CASE("gaussian adaptive: constant target degenerates to the mean") {
  GaussianAdaptive dist(GaussianSpec::Mode::global);
  const CoefficientVector h(std::vector<double>(10, 0.4), std::vector<std::size_t>(10, 1));
  RngStream rng = RngStream::substream(2, 0);
  const CoefficientVector v = dist.sample(h, Mask::zeros(10), rng);
  for (double x : v.values()) CHECK(x == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("gaussian adaptive: global law of large numbers") {
  // Target with mean 0.5 and std 0.2: half at 0.3, half at 0.7.
  std::vector<double> values(100);
  for (std::size_t i = 0; i < 100; ++i) values[i] = i % 2 == 0 ? 0.3 : 0.7;
  const CoefficientVector h(values, std::vector<std::size_t>(100, 1));
  GaussianAdaptive dist(GaussianSpec::Mode::global);

  double sum = 0.0;
  double sq = 0.0;
  std::size_t count = 0;
  for (int i = 0; i < 1000; ++i) {
    RngStream rng = RngStream::substream(77, static_cast<std::uint64_t>(i));
    const CoefficientVector v = dist.sample(h, Mask::zeros(100), rng);
    for (double x : v.values()) {
      sum += x;
      sq += x * x;
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);  // 1e5 draws
  const double std = std::sqrt(sq / static_cast<double>(count) - mean * mean);
  CHECK(std::abs(mean - 0.5) < 0.002);
  CHECK(std::abs(std - 0.2) < 0.002);
}

TEST_CASE("gaussian adaptive per scale: empirical group stats match the target") {
  auto rep = make_dwt2d(Shape::image(16, 16, 1), WaveletSpec{1, 2});
  RngStream img_rng(3);
  const Signal x = image_signal(random_vector(256, img_rng), 16, 16, 1);
  const CoefficientVector h = rep->analyze(x);
  const std::vector<int> scales = GaussianAdaptive::scales_from(*rep);
  GaussianAdaptive dist(GaussianSpec::Mode::per_scale, scales);

  // Target per-scale stats.
  const int max_scale = 2;
  std::vector<double> t_sum(max_scale + 1, 0.0), t_sq(max_scale + 1, 0.0),
      t_n(max_scale + 1, 0.0);
  for (std::size_t b = 0; b < h.block_count(); ++b) {
    t_sum[scales[b]] += h.block(b)[0];
    t_sq[scales[b]] += h.block(b)[0] * h.block(b)[0];
    t_n[scales[b]] += 1.0;
  }

  std::vector<double> s_sum(max_scale + 1, 0.0), s_sq(max_scale + 1, 0.0),
      s_n(max_scale + 1, 0.0);
  const int draws = 400;
  for (int i = 0; i < draws; ++i) {
    RngStream rng = RngStream::substream(91, static_cast<std::uint64_t>(i));
    const CoefficientVector v = dist.sample(h, Mask::zeros(h.block_count()), rng);
    for (std::size_t b = 0; b < h.block_count(); ++b) {
      s_sum[scales[b]] += v.block(b)[0];
      s_sq[scales[b]] += v.block(b)[0] * v.block(b)[0];
      s_n[scales[b]] += 1.0;
    }
  }
  for (int g = 1; g <= max_scale; ++g) {
    const double target_mean = t_sum[g] / t_n[g];
    const double target_std = std::sqrt(t_sq[g] / t_n[g] - target_mean * target_mean);
    const double mean = s_sum[g] / s_n[g];
    const double std = std::sqrt(s_sq[g] / s_n[g] - mean * mean);
    const double se_mean = target_std / std::sqrt(s_n[g]);
    CHECK(std::abs(mean - target_mean) < 3.0 * se_mean);
    CHECK(std::abs(std - target_std) / target_std < 0.05);
  }
}

TEST_CASE("gaussian adaptive per scale: zero group stays zero") {
  // Blocks labeled scale 1 are all zero in the target.
  const CoefficientVector h = CoefficientVector::from_blocks({{0.0}, {0.0}, {4.0}, {6.0}});
  GaussianAdaptive dist(GaussianSpec::Mode::per_scale, {1, 1, 2, 2});
  RngStream rng = RngStream::substream(5, 0);
  const CoefficientVector v = dist.sample(h, Mask::zeros(4), rng);
  CHECK(v.block(0)[0] == 0.0);
  CHECK(v.block(1)[0] == 0.0);
}

TEST_CASE("gaussian adaptive per scale: missing labels error") {
  const CoefficientVector h = CoefficientVector::from_blocks({{1.0}, {2.0}});
  GaussianAdaptive dist(GaussianSpec::Mode::per_scale);
  RngStream rng(1);
  CHECK_THROWS_AS(dist.sample(h, Mask::zeros(2), rng), Error);
}

TEST_CASE("blur: identity kernel returns the image") {
  RngStream rng(6);
  const Signal x = image_signal(random_vector(16, rng), 4, 4, 1);
  const Signal v = blur_image(x, {1.0}, 1);
  for (std::size_t i = 0; i < 16; ++i) CHECK(v[i] == x[i]);
}

TEST_CASE("blur: constant image is invariant under any normalized kernel") {
  const Signal x = image_signal(std::vector<double>(25, 0.3), 5, 5, 1);
  std::vector<double> kernel(9);
  RngStream rng(7);
  double sum = 0.0;
  for (double& k : kernel) {
    k = rng.uniform() + 0.1;
    sum += k;
  }
  for (double& k : kernel) k /= sum;
  const Signal v = blur_image(x, kernel, 3);
  for (double val : v.values()) CHECK(val == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("blur: box kernel spreads an impulse over the neighborhood") {
  std::vector<double> values(25, 0.0);
  values[12] = 1.0;  // center of a 5x5 image
  const Signal x = image_signal(values, 5, 5, 1);
  const std::vector<double> box(9, 1.0 / 9.0);
  const Signal v = blur_image(x, box, 3);
  for (std::size_t y = 0; y < 5; ++y) {
    for (std::size_t xx = 0; xx < 5; ++xx) {
      const bool near = y >= 1 && y <= 3 && xx >= 1 && xx <= 3;
      CHECK(v[y * 5 + xx] == doctest::Approx(near ? 1.0 / 9.0 : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("blur: even kernel side errors; samples are deterministic") {
  const Signal x = image_signal(std::vector<double>(16, 0.5), 4, 4, 1);
  CHECK_THROWS_AS(blur_image(x, std::vector<double>(4, 0.25), 2), Error);

  auto rep = make_identity(Shape::image(4, 4, 1), 1);
  BlurPerturbation blur(x, std::vector<double>(9, 1.0 / 9.0), 3, *rep);
  RngStream r1(1), r2(2);
  const CoefficientVector h = rep->analyze(x);
  const CoefficientVector a = blur.sample(h, Mask::zeros(16), r1);
  const CoefficientVector b = blur.sample(h, Mask::zeros(16), r2);
  for (std::size_t i = 0; i < a.total_size(); ++i) CHECK(a.values()[i] == b.values()[i]);
}

TEST_CASE("baseline inpainter: all-ones mask copies the coefficients") {
  RngStream rng(8);
  const CoefficientVector h(random_vector(12, rng), std::vector<std::size_t>(12, 1));
  const CoefficientVector v = baseline_inpaint(h, Mask::ones(12), 3, 0.05);
  for (std::size_t i = 0; i < 12; ++i) CHECK(v.values()[i] == h.values()[i]);
}

TEST_CASE("baseline inpainter: middle gap interpolates linearly") {
  const CoefficientVector h = CoefficientVector::from_blocks({{0.0}, {100.0}, {2.0}});
  const CoefficientVector v = baseline_inpaint(h, Mask({1.0, 0.0, 1.0}), 0, 0.0);
  CHECK(v.block(0)[0] == 0.0);
  CHECK(v.block(1)[0] == doctest::Approx(1.0));
  CHECK(v.block(2)[0] == 2.0);
}

TEST_CASE("baseline inpainter: boundary gaps extend the nearest edge") {
  const CoefficientVector h = CoefficientVector::from_blocks({{9.0}, {1.0}, {2.0}, {7.0}});
  const CoefficientVector v = baseline_inpaint(h, Mask({0.0, 1.0, 1.0, 0.0}), 0, 0.0);
  CHECK(v.block(0)[0] == doctest::Approx(1.0));
  CHECK(v.block(3)[0] == doctest::Approx(2.0));
}

TEST_CASE("baseline inpainter: fully masked input falls back to the first block") {
  const CoefficientVector single = CoefficientVector::from_blocks({{42.0}});
  const CoefficientVector v1 = baseline_inpaint(single, Mask::zeros(1), 0, 0.0);
  CHECK(v1.block(0)[0] == 42.0);

  const CoefficientVector h = CoefficientVector::from_blocks({{3.0}, {4.0}, {5.0}});
  const CoefficientVector v = baseline_inpaint(h, Mask::zeros(3), 0, 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(v.values()[i] == 3.0);
}

TEST_CASE("baseline inpainter: exact on affine sequences") {
  // h_i = a i + b stays exactly affine under linear interpolation.
  const double a = 0.37, b = -1.2;
  std::vector<double> values(16);
  for (std::size_t i = 0; i < 16; ++i) values[i] = a * static_cast<double>(i) + b;
  const CoefficientVector h(values, std::vector<std::size_t>(16, 1));
  std::vector<double> mask(16, 0.0);
  mask[0] = 1.0;
  mask[7] = 1.0;
  mask[15] = 1.0;
  const CoefficientVector v = baseline_inpaint(h, Mask(mask), 0, 0.0);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(std::abs(v.values()[i] - values[i]) < 1e-12);
  }
}

TEST_CASE("baseline inpainter: interpolates (m, w) blocks per coordinate") {
  const CoefficientVector h =
      CoefficientVector::from_blocks({{1.0, 10.0}, {0.0, 0.0}, {3.0, 30.0}});
  const CoefficientVector v = baseline_inpaint(h, Mask({1.0, 0.0, 1.0}), 0, 0.0);
  CHECK(v.block(1)[0] == doctest::Approx(2.0));
  CHECK(v.block(1)[1] == doctest::Approx(20.0));
}

TEST_CASE("baseline inpainter: noisy fill is seeded and leaves kept entries exact") {
  RngStream rng(9);
  const CoefficientVector h(random_vector(10, rng), std::vector<std::size_t>(10, 1));
  std::vector<double> mask(10, 0.0);
  mask[2] = 1.0;
  mask[8] = 1.0;
  const CoefficientVector a = baseline_inpaint(h, Mask(mask), 5, 0.05);
  const CoefficientVector b = baseline_inpaint(h, Mask(mask), 5, 0.05);
  const CoefficientVector c = baseline_inpaint(h, Mask(mask), 6, 0.05);
  CHECK(a.values() == b.values());
  CHECK(a.values() != c.values());
  CHECK(a.values()[2] == h.values()[2]);
  CHECK(a.values()[8] == h.values()[8]);
}

TEST_CASE("every strategy preserves the block structure") {
  auto rep = make_identity(Shape::image(4, 4, 1), 1);
  RngStream rng(10);
  const Signal x = image_signal(random_vector(16, rng), 4, 4, 1);
  const CoefficientVector h = rep->analyze(x);
  const Mask s = Mask::zeros(16);

  ConstantPerturbation c(0.5);
  GaussianAdaptive g(GaussianSpec::Mode::global);
  BlurPerturbation blur(x, std::vector<double>(9, 1.0 / 9.0), 3, *rep);
  BaselineInpainter inpaint(0.05);
  for (const PerturbationDistribution* dist :
       {static_cast<const PerturbationDistribution*>(&c),
        static_cast<const PerturbationDistribution*>(&g),
        static_cast<const PerturbationDistribution*>(&blur),
        static_cast<const PerturbationDistribution*>(&inpaint)}) {
    RngStream sub = RngStream::substream(11, 0);
    CHECK(dist->sample(h, s, sub).same_structure(h));
  }
}
