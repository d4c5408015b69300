// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <doctest.h>

#include "gdiff/error.hpp"
#include "gdiff/guidance.hpp"
#include "gdiff/oracle.hpp"
#include "gdiff/rng.hpp"

using namespace gdiff;

TEST_CASE("conjugate posterior examples") {
  const auto p1 = gaussian_posterior(Tensor::vector({0.0}), Eigen::MatrixXd::Identity(1, 1), make_identity(1),
                                     Tensor::vector({2.0}), 1.0);
  CHECK(p1.mean[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p1.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-14));

  const auto p2 = gaussian_posterior(Tensor::vector({0.0, 0.0}), Eigen::MatrixXd::Identity(2, 2),
                                     make_matrix(1, 2, {1.0, 0.0}), Tensor::vector({2.0}), 0.5);
  // Posterior precision on the observed coordinate is 1 + 1/0.25 = 5.
  CHECK(p2.mean[0] == doctest::Approx(2.0 * 4.0 / 5.0).epsilon(1e-14));
  CHECK(p2.mean[1] == doctest::Approx(0.0));
  CHECK(p2.covariance(0, 0) == doctest::Approx(1.0 / 5.0).epsilon(1e-14));
  CHECK(p2.covariance(1, 1) == doctest::Approx(1.0).epsilon(1e-14));

  const auto wide = gaussian_posterior(Tensor::vector({0.3, -0.7}), Eigen::MatrixXd::Identity(2, 2), make_identity(2),
                                       Tensor::vector({5.0, 5.0}), 1e6);
  CHECK(std::abs(wide.mean[0] - 0.3) < 1e-6);
  CHECK(std::abs(wide.mean[1] + 0.7) < 1e-6);
}

TEST_CASE("conjugate covariance stays symmetric PSD") {
  SeededGenerator rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(5);
    Eigen::MatrixXd a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.gaussian();
    const Eigen::MatrixXd prior = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    const std::size_t m = 1 + rng.uniform_index(n);
    std::vector<double> h(m * n);
    for (double& v : h) v = rng.gaussian();
    const auto post = gaussian_posterior(rng.gaussian({n}), prior, make_matrix(m, n, h), rng.gaussian({m}),
                                         0.1 + rng.uniform());
    CHECK((post.covariance - post.covariance.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(post.covariance);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);
  }
}

TEST_CASE("dense oracles reject dimensions above the cap") {
  const std::size_t n = kOracleMaxDim + 1;
  CHECK_THROWS_AS(gaussian_posterior(Tensor({n}), Eigen::MatrixXd::Identity(n, n), make_identity(n), Tensor({n}), 1.0),
                  InvalidArgument);
}

TEST_CASE("grid posterior agrees with the conjugate posterior") {
  SeededGenerator rng(2);
  for (int trial = 0; trial < 6; ++trial) {
    const double var = 0.3 + rng.uniform();
    const Tensor mu = rng.gaussian({2});
    const GmmPrior prior{{1.0}, {{mu[0], mu[1]}}, {var}};
    const LinearOperator op = trial % 2 == 0 ? make_matrix(1, 2, {1.0, 0.5}) : make_identity(2);
    const Tensor y = rng.gaussian({op.out_dim()});
    const double sigma = 0.4 + rng.uniform();
    const GridPosterior grid(prior, op, y, sigma, GridSpec{-8.0, 8.0, 321});
    const auto exact = gaussian_posterior(mu, var * Eigen::MatrixXd::Identity(2, 2), op, y, sigma);
    CHECK(grid.captured_mass() == doctest::Approx(1.0).epsilon(1e-3));
    const Tensor mean = grid.mean();
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(mean[i] - exact.mean[i]) < grid.spacing());
  }
}

TEST_CASE("grid posterior symmetry, limits and coarse grids") {
  const GmmPrior sym{{0.5, 0.5}, {{1.5, -1.0}, {-1.5, 1.0}}, {0.4, 0.4}};
  const GridPosterior g(sym, make_identity(2), Tensor({2}), 0.7, GridSpec{});
  CHECK(std::abs(g.mean()[0]) < 1e-10);
  CHECK(std::abs(g.mean()[1]) < 1e-10);
  CHECK(g.mass_below(0, 0.0) == doctest::Approx(0.5).epsilon(1e-6));

  // An uninformative likelihood leaves the prior: W1 against prior draws is small.
  const GmmPrior normal1 = GmmPrior::standard_normal(1);
  const GridPosterior flat(normal1, make_identity(1), Tensor::vector({3.0}), 1e6, GridSpec{-7.0, 7.0, 2001});
  SeededGenerator rng(3);
  std::vector<double> draws(4000);
  for (double& v : draws) v = rng.gaussian();
  CHECK(flat.w1_distance(0, draws) < 0.05);
  std::vector<double> shifted = draws;
  for (double& v : shifted) v += 0.5;
  CHECK(flat.w1_distance(0, shifted) == doctest::Approx(0.5).epsilon(0.1));

  CHECK_THROWS_AS(GridPosterior(normal1, make_identity(1), Tensor::vector({0.0}), 10.0, GridSpec{-1.0, 1.0, 101}),
                  InvalidArgument);
}

TEST_CASE("gmm log evidence matches the grid normalizer in 1D") {
  const GmmPrior prior{{0.3, 0.7}, {{-1.0}, {2.0}}, {0.5, 0.2}};
  const double sigma = 0.6, y = 0.4;
  // Oracle: direct trapezoid quadrature of p(x) N(y; x, sigma^2).
  const int n = 20001;
  const double lo = -10.0, hi = 10.0, h = (hi - lo) / (n - 1);
  double integral = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + i * h;
    double px = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
      const double v = prior.variances[k];
      px += prior.weights[k] * std::exp(-0.5 * (x - prior.means[k][0]) * (x - prior.means[k][0]) / v) /
            std::sqrt(2 * M_PI * v);
    }
    const double lik = std::exp(-0.5 * (y - x) * (y - x) / (sigma * sigma)) / std::sqrt(2 * M_PI * sigma * sigma);
    integral += (i == 0 || i == n - 1 ? 0.5 : 1.0) * px * lik * h;
  }
  CHECK(gmm_log_evidence(prior, make_identity(1), Tensor::vector({y}), sigma) ==
        doctest::Approx(std::log(integral)).epsilon(1e-8));
}

TEST_CASE("finite difference vjp") {
  SeededGenerator rng(4);
  const std::vector<double> a = {1.0, -2.0, 0.5, 3.0, 0.0, -1.0};
  auto linear = [&](const Tensor& x) {
    return Tensor::vector({a[0] * x[0] + a[1] * x[1] + a[2] * x[2], a[3] * x[0] + a[4] * x[1] + a[5] * x[2]});
  };
  const Tensor x = rng.gaussian({3});
  const Tensor v = rng.gaussian({2});
  const Tensor got = finite_diff_jacobian_vjp(linear, x, v, 1e-3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(got[j] - (a[j] * v[0] + a[3 + j] * v[1])) < 1e-10);

  // Scalar quadratic 0.5 x^T x + x0 x1 has gradient (x0 + x1, x1 + x0, x2).
  auto quad = [](const Tensor& p) { return Tensor::vector({0.5 * dot(p, p) + p[0] * p[1]}); };
  const Tensor g = finite_diff_jacobian_vjp(quad, x, Tensor::vector({1.0}), 1e-4);
  CHECK(std::abs(g[0] - (x[0] + x[1])) < 1e-8);
  CHECK(std::abs(g[2] - x[2]) < 1e-8);

  auto smooth = [](const Tensor& p) { return Tensor::vector({std::sin(p[0]) * std::exp(p[1])}); };
  const Tensor p = Tensor::vector({0.3, 0.2});
  const double exact = std::cos(0.3) * std::exp(0.2);
  const double e1 = std::abs(finite_diff_jacobian_vjp(smooth, p, Tensor::vector({1.0}), 1e-2)[0] - exact);
  const double e2 = std::abs(finite_diff_jacobian_vjp(smooth, p, Tensor::vector({1.0}), 5e-3)[0] - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));

  CHECK_THROWS_AS(finite_diff_jacobian_vjp(linear, x, v, 0.0), InvalidArgument);
  CHECK_THROWS(finite_diff_jacobian_vjp([](const Tensor&) { return Tensor::vector({NAN}); }, x, Tensor::vector({1.0}),
                                        1e-3));
}

TEST_CASE("stationarity residual examples") {
  const auto s = NoiseSchedule::from_betas({0.36});
  const GmmPrior normal = GmmPrior::standard_normal(1);
  CHECK(std::abs(map_stationarity_residual(normal, s, Tensor::vector({1.0}), 1, Tensor::vector({0.8}))[0]) < 1e-14);

  const double r1 = map_stationarity_residual(normal, s, Tensor::vector({1.0}), 1, Tensor::vector({0.81}))[0];
  const double r2 = map_stationarity_residual(normal, s, Tensor::vector({1.0}), 1, Tensor::vector({0.82}))[0];
  CHECK(r2 / r1 == doctest::Approx(2.0).epsilon(1e-9));

  const GmmPrior sym{{0.5, 0.5}, {{1.0}, {-1.0}}, {0.3, 0.3}};
  CHECK(std::abs(map_stationarity_residual(sym, s, Tensor::vector({0.0}), 1, Tensor::vector({0.0}))[0]) < 1e-14);
}

TEST_CASE("tuned q2 recovers zeta for a Gaussian prior") {
  const auto s = NoiseSchedule::linear(1000, 1e-4, 0.02);
  const GmmScore model(GmmPrior::standard_normal(2));
  SeededGenerator rng(5);
  for (int t : {50, 300, 700}) {
    const Q2Fit fit = tune_q2_for_stationarity(model, s, rng.gaussian({2}), t, 5.0);
    CHECK(fit.q2 == doctest::Approx(s.zeta(t)).epsilon(1e-4));
    CHECK(fit.residual_norm < 1e-6);
  }
}
