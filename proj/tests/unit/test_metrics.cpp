// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "gdiff/error.hpp"
#include "gdiff/metrics.hpp"
#include "gdiff/rng.hpp"

using namespace gdiff;

TEST_CASE("mse examples") {
  const Tensor a = Tensor::vector({0.2, 0.4, 0.9});
  CHECK(mse(a, a) == 0.0);
  CHECK(mse(a, Tensor::vector({0.3, 0.5, 1.0})) == doctest::Approx(0.01));
  CHECK(mse(Tensor::vector({0, 1}), Tensor::vector({1, 0})) == 1.0);
  CHECK_THROWS_AS(mse(a, Tensor::vector({1, 2})), InvalidArgument);
}

TEST_CASE("psnr examples") {
  const Tensor a({4}, 0.3);
  CHECK(psnr(a, Tensor({4}, 0.4)) == doctest::Approx(20.0));
  CHECK(std::isinf(psnr(a, a)));
  CHECK(format_metric(psnr(a, a)) == "inf");
  CHECK(format_metric(20.0, 2) == "20.00");
  CHECK(psnr(Tensor::vector({0, 1}), Tensor::vector({1, 0})) == 0.0);
  CHECK(psnr(a, Tensor({4}, 0.4), 255.0) == doctest::Approx(20.0 + 20.0 * std::log10(255.0)));
  CHECK_THROWS_AS(psnr(a, a, 0.0), InvalidArgument);
}

TEST_CASE("psnr symmetry, monotonicity and permutation invariance") {
  SeededGenerator rng(1);
  const Tensor a = rng.gaussian({16});
  const Tensor b = rng.gaussian({16});
  CHECK(psnr(a, b) == psnr(b, a));
  double last = std::numeric_limits<double>::infinity();
  for (double s : {0.01, 0.1, 0.5, 1.0, 3.0}) {
    const double p = psnr(a, a + s * b);
    CHECK(p < last);
    last = p;
  }
  Tensor pa(a.shape()), pb(b.shape());
  for (std::size_t i = 0; i < 16; ++i) {
    pa[i] = a[(i * 5) % 16];
    pb[i] = b[(i * 5) % 16];
  }
  CHECK(psnr(pa, pb) == doctest::Approx(psnr(a, b)).epsilon(1e-14));
}

TEST_CASE("sample moments") {
  std::vector<Tensor> one{Tensor::vector({3.0})};
  CHECK(sample_mean(one)[0] == 3.0);
  CHECK_THROWS_AS(sample_moments(one), InvalidArgument);
  CHECK_THROWS_AS(sample_mean(std::vector<Tensor>{}), InvalidArgument);

  std::vector<Tensor> two{Tensor::vector({-1.0}), Tensor::vector({1.0})};
  const auto m = sample_moments(two);
  CHECK(m.mean[0] == 0.0);
  CHECK(m.variance[0] == 2.0);

  SeededGenerator rng(2);
  std::vector<Tensor> draws;
  for (int i = 0; i < 10000; ++i) draws.push_back(rng.gaussian({2}));
  const auto g = sample_moments(draws);
  for (std::size_t d = 0; d < 2; ++d) {
    CHECK(std::abs(g.mean[d]) < 0.05);
    CHECK(std::abs(g.variance[d] - 1.0) < 0.1);
  }
  std::vector<Tensor> mixed{Tensor::vector({1.0}), Tensor::vector({1.0, 2.0})};
  CHECK_THROWS_AS(sample_moments(mixed), InvalidArgument);
}
