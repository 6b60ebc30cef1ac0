#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "rde/wavelet.hpp"
#include "test_helpers.hpp"

using namespace rde;
using namespace rde::testing;

TEST_CASE("daubechies filters match closed forms") {
  const double r2 = std::sqrt(2.0);

  const std::vector<double> haar = daubechies_filter(1);
  CHECK(haar.size() == 2);
  CHECK(haar[0] == doctest::Approx(1.0 / r2).epsilon(1e-14));
  CHECK(haar[1] == doctest::Approx(1.0 / r2).epsilon(1e-14));

  // Order 2 closed form.
  const double s3 = std::sqrt(3.0);
  const std::vector<double> db2_expected = {(1.0 + s3) / (4.0 * r2), (3.0 + s3) / (4.0 * r2),
                                            (3.0 - s3) / (4.0 * r2), (1.0 - s3) / (4.0 * r2)};
  const std::vector<double> db2 = daubechies_filter(2);
  REQUIRE(db2.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(db2[i] == doctest::Approx(db2_expected[i]).epsilon(1e-10));
  }

  // Order 3 closed form via sqrt(10) and sqrt(5 + 2 sqrt(10)).
  const double s10 = std::sqrt(10.0);
  const double q = std::sqrt(5.0 + 2.0 * s10);
  const std::vector<double> db3_expected = {
      r2 * (1.0 + s10 + q) / 32.0,        r2 * (5.0 + s10 + 3.0 * q) / 32.0,
      r2 * (10.0 - 2.0 * s10 + 2.0 * q) / 32.0, r2 * (10.0 - 2.0 * s10 - 2.0 * q) / 32.0,
      r2 * (5.0 + s10 - 3.0 * q) / 32.0,  r2 * (1.0 + s10 - q) / 32.0};
  const std::vector<double> db3 = daubechies_filter(3);
  REQUIRE(db3.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(db3[i] == doctest::Approx(db3_expected[i]).epsilon(1e-10));
  }
}

TEST_CASE("daubechies filters are orthonormal up to order 8") {
  for (int p = 1; p <= 8; ++p) {
    const std::vector<double> g = daubechies_filter(p);
    REQUIRE(g.size() == static_cast<std::size_t>(2 * p));
    double sum = 0.0;
    for (double v : g) sum += v;
    CHECK(sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    for (std::size_t shift = 0; 2 * shift < g.size(); ++shift) {
      double dot = 0.0;
      for (std::size_t i = 0; i + 2 * shift < g.size(); ++i) dot += g[i] * g[i + 2 * shift];
      CHECK(std::abs(dot - (shift == 0 ? 1.0 : 0.0)) < 1e-12);
    }
  }
  CHECK_THROWS_AS(daubechies_filter(0), Error);
  CHECK_THROWS_AS(daubechies_filter(11), Error);
}

TEST_CASE("1D analogue: constant signal has zero detail under Haar") {
  std::vector<double> approx, detail;
  dwt_analyze_1d(std::vector<double>{1.0, 1.0, 1.0, 1.0}, daubechies_filter(1), approx, detail);
  REQUIRE(approx.size() == 2);
  CHECK(approx[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(approx[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(detail[0] == doctest::Approx(0.0));
  CHECK(detail[1] == doctest::Approx(0.0));
}

TEST_CASE("1D zero-padded step reconstructs exactly") {
  RngStream rng(31);
  for (const int order : {1, 2, 3}) {
    for (const std::size_t n : {7UL, 16UL, 33UL}) {
      const std::vector<double> x = random_vector(n, rng);
      std::vector<double> approx, detail, back;
      const std::vector<double> g = daubechies_filter(order);
      dwt_analyze_1d(x, g, approx, detail);
      dwt_synthesize_1d(approx, detail, g, n, back);
      CHECK(rel_l2_error(back, x) < 1e-12);

      // The step is an isometry: coefficient energy equals signal energy.
      double ex = 0.0, ec = 0.0;
      for (double v : x) ex += v * v;
      for (double v : approx) ec += v * v;
      for (double v : detail) ec += v * v;
      CHECK(std::abs(ec - ex) / ex < 1e-12);
    }
  }
}

TEST_CASE("constant image: all detail coefficients vanish") {
  auto rep = make_dwt2d(Shape::image(8, 8, 1), WaveletSpec{1, 1});
  const Signal x = image_signal(std::vector<double>(64, 0.7), 8, 8, 1);
  const CoefficientVector h = rep->analyze(x);
  const auto& info = rep->block_info();
  for (std::size_t b = 0; b < h.block_count(); ++b) {
    if (info[b].subband != Subband::approx) {
      CHECK(std::abs(h.block(b)[0]) < 1e-12);
    }
  }
}

TEST_CASE("2D round trip: random 16x16 image, order 3, two levels") {
  RngStream rng(32);
  const Signal x = image_signal(random_vector(256, rng), 16, 16, 1);
  const WaveletSpec spec{3, 2};
  const CoefficientVector h = dwt_forward(x, spec);
  const Signal back = dwt_inverse(h, spec, x.shape());
  CHECK(rel_l2_error(back.values(), x.values()) < 1e-8);
}

TEST_CASE("2D round trip across orders, levels, and channels") {
  RngStream rng(33);
  for (const int order : {1, 2, 3}) {
    for (const int levels : {1, 2, 3}) {
      const Signal x = image_signal(random_vector(16 * 12 * 2, rng), 16, 12, 2);
      const WaveletSpec spec{order, levels};
      const Signal back = dwt_inverse(dwt_forward(x, spec), spec, x.shape());
      CHECK(rel_l2_error(back.values(), x.values()) < 1e-8);
    }
  }
}

TEST_CASE("dwt_inverse: zero coefficients give a zero image") {
  auto rep = make_dwt2d(Shape::image(8, 8, 1), WaveletSpec{2, 2});
  const Signal y = rep->synthesize(
      CoefficientVector(std::vector<double>(rep->block_count(), 0.0),
                        std::vector<std::size_t>(rep->block_count(), 1)));
  for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("single coarse approx coefficient: forward returns the unit") {
  auto rep = make_dwt2d(Shape::image(16, 16, 1), WaveletSpec{2, 2});
  const auto& info = rep->block_info();
  // Pick a central approx coefficient so its scaling function lies fully
  // inside the image (boundary coefficients are truncated by zero padding).
  std::size_t approx_count = 0;
  for (const BlockInfo& b : info) {
    if (b.subband == Subband::approx) ++approx_count;
  }
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(double(approx_count))));
  const std::size_t central = (side / 2) * side + side / 2;
  std::size_t unit_block = rep->block_count();
  for (std::size_t b = 0; b < rep->block_count(); ++b) {
    if (info[b].subband == Subband::approx && info[b].index == central) {
      unit_block = b;
      break;
    }
  }
  REQUIRE(unit_block < rep->block_count());
  std::vector<double> values(rep->block_count(), 0.0);
  values[unit_block] = 1.0;
  const CoefficientVector h(values, std::vector<std::size_t>(rep->block_count(), 1));
  const Signal image = rep->synthesize(h);
  const CoefficientVector round = rep->analyze(image);
  for (std::size_t b = 0; b < rep->block_count(); ++b) {
    CHECK(round.values()[b] == doctest::Approx(values[b]).epsilon(1e-10));
  }
}

TEST_CASE("masked coefficients equal synthesis of kept coefficients") {
  RngStream rng(34);
  auto rep = make_dwt2d(Shape::image(8, 8, 1), WaveletSpec{1, 2});
  const Signal x = image_signal(random_vector(64, rng), 8, 8, 1);
  const CoefficientVector h = rep->analyze(x);
  CoefficientVector kept = h;
  for (std::size_t b = 0; b < h.block_count(); ++b) {
    if (b % 3 == 0) kept.block(b)[0] = 0.0;
  }
  // Linearity: f(kept) = f(h) - f(dropped).
  CoefficientVector dropped = h;
  for (std::size_t b = 0; b < h.block_count(); ++b) {
    if (b % 3 != 0) dropped.block(b)[0] = 0.0;
  }
  const Signal yk = rep->synthesize(kept);
  const Signal yh = rep->synthesize(h);
  const Signal yd = rep->synthesize(dropped);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(yk[i] == doctest::Approx(yh[i] - yd[i]).epsilon(1e-10));
  }
}

TEST_CASE("energy preservation on interior-supported images") {
  RngStream rng(35);
  std::vector<double> values(32 * 32, 0.0);
  // Support away from the boundary by more than the filter length.
  for (std::size_t y = 8; y < 24; ++y) {
    for (std::size_t x = 8; x < 24; ++x) values[y * 32 + x] = rng.gaussian();
  }
  const Signal x = image_signal(values, 32, 32, 1);
  const CoefficientVector h = dwt_forward(x, WaveletSpec{3, 3});
  double ex = 0.0, ec = 0.0;
  for (double v : x.values()) ex += v * v;
  for (double v : h.values()) ec += v * v;
  CHECK(std::abs(ec - ex) / ex < 1e-8);
}

TEST_CASE("linearity of the inverse transform") {
  RngStream rng(36);
  auto rep = make_dwt2d(Shape::image(8, 8, 1), WaveletSpec{2, 1});
  const std::size_t k = rep->block_count();
  const CoefficientVector h1(random_vector(k, rng), std::vector<std::size_t>(k, 1));
  const CoefficientVector h2(random_vector(k, rng), std::vector<std::size_t>(k, 1));
  const double a = 1.7, b = -0.4;
  std::vector<double> combo(k);
  for (std::size_t i = 0; i < k; ++i) combo[i] = a * h1.values()[i] + b * h2.values()[i];
  const Signal lhs = rep->synthesize(CoefficientVector(combo, std::vector<std::size_t>(k, 1)));
  const Signal s1 = rep->synthesize(h1);
  const Signal s2 = rep->synthesize(h2);
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    CHECK(lhs[i] == doctest::Approx(a * s1[i] + b * s2[i]).epsilon(1e-10));
  }
}

TEST_CASE("vjp is the exact adjoint of synthesize") {
  RngStream rng(37);
  auto rep = make_dwt2d(Shape::image(12, 8, 1), WaveletSpec{2, 2});
  const std::size_t k = rep->block_count();
  const CoefficientVector h(random_vector(k, rng), std::vector<std::size_t>(k, 1));
  const std::vector<double> cot = random_vector(12 * 8, rng);
  const Signal y = rep->synthesize(h);
  const CoefficientVector g = rep->synthesize_vjp(h, cot);
  double lhs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += y[i] * cot[i];
  double rhs = 0.0;
  for (std::size_t i = 0; i < k; ++i) rhs += h.values()[i] * g.values()[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("scale labels cover 1..J with the approx band at scale J") {
  auto rep = make_dwt2d(Shape::image(32, 32, 1), WaveletSpec{3, 5});
  const auto& info = rep->block_info();
  int max_scale = 0;
  std::size_t approx_blocks = 0;
  for (const BlockInfo& b : info) {
    CHECK(b.scale >= 1);
    CHECK(b.scale <= 5);
    max_scale = std::max(max_scale, b.scale);
    if (b.subband == Subband::approx) {
      CHECK(b.scale == 5);
      ++approx_blocks;
    }
  }
  CHECK(max_scale == 5);
  CHECK(approx_blocks > 0);
}

TEST_CASE("too many levels errors") {
  CHECK_THROWS_AS(make_dwt2d(Shape::image(8, 8, 1), WaveletSpec{1, 4}), Error);
  CHECK(dwt_max_levels(8, 8) == 3);
  CHECK(dwt_max_levels(32, 16) == 4);
}
