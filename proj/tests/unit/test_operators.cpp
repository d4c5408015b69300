// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <doctest.h>

#include "gdiff/error.hpp"
#include "gdiff/operators.hpp"
#include "gdiff/rng.hpp"
#include "gdiff/tensor_io.hpp"
#include "helpers.hpp"

using namespace gdiff;

namespace {

double adjoint_residual(const LinearOperator& op, SeededGenerator& rng) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Tensor x = rng.gaussian(op.in_shape());
    const Tensor y = rng.gaussian(op.out_shape());
    const double lhs = dot(op.apply(x), y);
    worst = std::max(worst, std::abs(lhs - dot(x, op.adjoint(y))) / std::max(1.0, std::abs(lhs)));
  }
  return worst;
}

// Reference 1D Catmull-Rom resampling weights, built independently of the library.
double cubic(double x) {
  const double a = -0.5;
  x = std::abs(x);
  if (x <= 1) return (a + 2) * x * x * x - (a + 3) * x * x + 1;
  if (x < 2) return a * x * x * x - 5 * a * x * x + 8 * a * x - 4 * a;
  return 0;
}

}  // namespace

TEST_CASE("identity operator") {
  const auto op = make_identity(2);
  CHECK(op.apply(Tensor::vector({3, 4})) == Tensor::vector({3, 4}));
  CHECK(op.adjoint(Tensor::vector({3, 4})) == Tensor::vector({3, 4}));
  SeededGenerator rng(1);
  CHECK(adjoint_residual(op, rng) == 0.0);
  CHECK_THROWS_AS(make_identity(0), InvalidArgument);
}

TEST_CASE("mask operator") {
  const auto op = make_mask(2, {0});
  CHECK(op.apply(Tensor::vector({3, 4})) == Tensor::vector({3}));
  CHECK(op.adjoint(Tensor::vector({5})) == Tensor::vector({5, 0}));
  const auto all = make_mask(3, {0, 1, 2});
  CHECK(all.apply(Tensor::vector({1, 2, 3})) == Tensor::vector({1, 2, 3}));
  CHECK_THROWS_AS(make_mask(3, {}), InvalidArgument);
  CHECK_THROWS_AS(make_mask(3, {1, 1}), InvalidArgument);
  CHECK_THROWS_AS(make_mask(3, {2, 1}), InvalidArgument);
  CHECK_THROWS_AS(make_mask(3, {3}), InvalidArgument);
  CHECK_THROWS_AS(op.apply(Tensor::vector({1, 2, 3})), InvalidArgument);
}

TEST_CASE("box and pattern masks") {
  const ImageMeta meta{4, 4, 1};
  const auto box = make_box_mask(meta, 1, 1, 2, 2);
  CHECK(box.out_dim() == 12);
  CHECK(make_box_mask(ImageMeta{4, 4, 3}, 1, 1, 2, 2).out_dim() == 36);
  CHECK(make_box_mask(meta, 1, 1, 0, 2).kind() == OperatorKind::identity);
  CHECK_THROWS_AS(make_box_mask(meta, 3, 3, 2, 2), InvalidArgument);

  Tensor pattern({4, 4});
  pattern[5] = 1.0;
  pattern[10] = 1.0;
  const auto pm = make_pattern_mask(meta, pattern);
  CHECK(pm.out_dim() == 14);
  CHECK_THROWS_AS(make_pattern_mask(meta, Tensor({4, 4}, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(make_pattern_mask(meta, Tensor({3, 4})), InvalidArgument);
  Tensor non_binary({4, 4});
  non_binary[0] = 0.5;
  CHECK_THROWS_AS(make_pattern_mask(meta, non_binary), InvalidArgument);
}

TEST_CASE("pattern files use a 128 threshold") {
  testing::ScratchDir dir("pattern");
  testing::write_bytes(dir / "m.pgm", std::string("P5\n2 2\n255\n") + std::string("\x00\x7f\x80\xff", 4));
  const Tensor p = load_pattern(dir / "m.pgm");
  CHECK(p == Tensor({2, 2}, std::vector<double>{0, 0, 1, 1}));
  CHECK_THROWS_AS(load_pattern(dir / "none.pgm"), IoError);
}

TEST_CASE("mask idempotence") {
  SeededGenerator rng(2);
  const auto op = make_box_mask(ImageMeta{5, 6, 3}, 1, 2, 3, 2);
  const Tensor y = rng.gaussian(op.out_shape());
  CHECK(op.apply(op.adjoint(y)) == y);
}

TEST_CASE("block average downsampling") {
  const auto op = make_downsample(ImageMeta{1, 4, 1}, 2, DownsampleKernel::block_average);
  CHECK(op.apply(Tensor({1, 1, 4}, std::vector<double>{1, 2, 3, 4})) == Tensor({1, 1, 2}, std::vector<double>{1.5, 3.5}));
  CHECK(op.adjoint(Tensor::vector({2.0, 6.0})) == Tensor({1, 1, 4}, std::vector<double>{1, 1, 3, 3}));

  const auto two_d = make_downsample(ImageMeta{4, 4, 1}, 2, DownsampleKernel::block_average);
  Tensor img({1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) img[i] = static_cast<double>(i);
  const Tensor out = two_d.apply(img);
  CHECK(out[0] == doctest::Approx((0 + 1 + 4 + 5) / 4.0));
  CHECK(out[3] == doctest::Approx((10 + 11 + 14 + 15) / 4.0));
  CHECK_THROWS_AS(make_downsample(ImageMeta{5, 4, 1}, 2, DownsampleKernel::block_average), InvalidArgument);
}

TEST_CASE("downsampling preserves constants") {
  for (auto kernel : {DownsampleKernel::block_average, DownsampleKernel::bicubic}) {
    for (std::size_t factor : {2u, 4u}) {
      const auto op = make_downsample(ImageMeta{8, 8, 3}, factor, kernel);
      const Tensor out = op.apply(Tensor({3, 8, 8}, 0.37));
      for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(0.37).epsilon(1e-14));
    }
  }
}

TEST_CASE("bicubic rows match stretched Catmull-Rom weights") {
  // Interior output pixel of a 1 x 16 image with factor 2: taps are
  // cubic((j + 0.5 - center) / factor) / sum, center = (o + 0.5) * factor.
  const auto op = make_downsample(ImageMeta{1, 16, 1}, 2, DownsampleKernel::bicubic);
  const std::size_t o = 4;
  Tensor basis({1, 1, 8});
  basis[o] = 1.0;
  const Tensor row = op.adjoint(basis);
  const double center = (o + 0.5) * 2.0;
  double total = 0.0;
  std::vector<double> w(16, 0.0);
  for (std::size_t j = 0; j < 16; ++j) {
    w[j] = cubic((j + 0.5 - center) / 2.0);
    total += w[j];
  }
  for (std::size_t j = 0; j < 16; ++j) CHECK(row[j] == doctest::Approx(w[j] / total).epsilon(1e-12));
}

TEST_CASE("adjoint dot-product tests") {
  SeededGenerator rng(3);
  const ImageMeta meta{8, 8, 1};
  Tensor pattern({8, 8});
  for (std::size_t i = 0; i < 64; ++i) pattern[i] = rng.uniform() < 0.3 ? 1.0 : 0.0;
  pattern[0] = 0.0;
  CHECK(adjoint_residual(make_identity(meta.shape()), rng) < 1e-10);
  CHECK(adjoint_residual(make_box_mask(meta, 2, 2, 4, 4), rng) < 1e-10);
  CHECK(adjoint_residual(make_pattern_mask(meta, pattern), rng) < 1e-10);
  for (auto kernel : {DownsampleKernel::block_average, DownsampleKernel::bicubic}) {
    for (std::size_t factor : {2u, 4u}) CHECK(adjoint_residual(make_downsample(meta, factor, kernel), rng) < 1e-10);
    CHECK(adjoint_residual(make_downsample(ImageMeta{8, 8, 3}, 2, kernel), rng) < 1e-10);
  }
  CHECK(adjoint_residual(make_matrix(2, 3, {1, 2, 3, 4, 5, 6}), rng) < 1e-10);
}

TEST_CASE("dense matrix operator") {
  const auto op = make_matrix(1, 2, {1.0, 0.0});
  CHECK(op.apply(Tensor::vector({2.5, -1.0})) == Tensor::vector({2.5}));
  CHECK(op.adjoint(Tensor::vector({3.0})) == Tensor::vector({3.0, 0.0}));
  CHECK_THROWS_AS(make_matrix(2, 2, {1.0}), InvalidArgument);
}

TEST_CASE("corrupt") {
  SeededGenerator rng(4);
  const auto op = make_mask(2, {0});
  const Measurement m = corrupt(op, Tensor::vector({3, 4}), 1e-12, rng);
  CHECK(m.y[0] == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(m.sigma_y == 1e-12);
  CHECK_THROWS_AS(corrupt(op, Tensor::vector({3, 4}), 0.0, rng), InvalidArgument);
  CHECK_THROWS_AS(corrupt(op, Tensor::vector({3, 4}), -1.0, rng), InvalidArgument);

  const auto id = make_identity(1);
  double sum = 0.0, sq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double y = corrupt(id, Tensor::vector({0.0}), 1.0, rng).y[0];
    sum += y;
    sq += y * y;
  }
  const double mean = sum / n;
  CHECK(std::abs((sq - n * mean * mean) / (n - 1) - 1.0) < 0.05);
}
