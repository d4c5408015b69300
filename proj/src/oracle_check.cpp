// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/oracle_check.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "gdiff/error.hpp"
#include "gdiff/gmm_score.hpp"
#include "gdiff/guidance.hpp"
#include "gdiff/mlp_score.hpp"
#include "gdiff/operators.hpp"
#include "gdiff/oracle.hpp"
#include "gdiff/rng.hpp"
#include "gdiff/schedule.hpp"
#include "gdiff/tensor_io.hpp"

namespace gdiff {

namespace {

struct Suite {
  std::string name;
  double tolerance;
  std::function<double()> worst_error;
};

double rel_err(const Tensor& a, const Tensor& b) {
  return norm(a - b) / std::max(1.0, std::max(norm(a), norm(b)));
}

GmmPrior random_gmm(SeededGenerator& rng, std::size_t dim, std::size_t k) {
  GmmPrior p;
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    p.weights.push_back(0.2 + rng.uniform());
    total += p.weights.back();
    std::vector<double> mean(dim);
    for (double& m : mean) m = 2.0 * rng.gaussian();
    p.means.push_back(mean);
    p.variances.push_back(0.05 + 0.5 * rng.uniform());
  }
  for (double& w : p.weights) w /= total;
  return p;
}

int random_step(SeededGenerator& rng, const NoiseSchedule& s) {
  return 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(s.steps())));
}

std::vector<Suite> make_suites() {
  const NoiseSchedule schedule = NoiseSchedule::linear(1000, 1e-4, 0.02);
  std::vector<Suite> suites;

  suites.push_back({"schedule", 1e-15, [schedule] {
    double worst = 0.0;
    for (int t = 1; t <= schedule.steps(); ++t) {
      worst = std::max(worst, std::abs(schedule.zeta(t) + schedule.alpha_bar(t) - 1.0));
      if (t > 1) {
        worst = std::max(worst, std::abs(schedule.alpha_bar(t) - schedule.alpha_bar(t - 1) * schedule.alpha(t)));
        if (!(schedule.alpha_bar(t) < schedule.alpha_bar(t - 1))) worst = 1.0;
      }
    }
    return std::max(worst, schedule.sigma_tilde(1));
  }});

  suites.push_back({"gaussian_exactness", 1e-12, [schedule] {
    SeededGenerator rng(101);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const std::size_t dim = 1 + rng.uniform_index(4);
      const GmmScore model(GmmPrior::standard_normal(dim));
      const int t = random_step(rng, schedule);
      const Tensor x = rng.gaussian({dim});
      GuidanceConfig cfg;
      cfg.q2_tracks_zeta = true;
      const X0Estimate est = estimate_x0_map(schedule, model, x, t, cfg);
      Tensor expect = x;
      expect *= std::sqrt(schedule.alpha_bar(t));
      worst = std::max(worst, max_abs(est.x_hat - expect));
    }
    return worst;
  }});

  suites.push_back({"map_reduction", 1e-12, [schedule] {
    SeededGenerator rng(202);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const GmmScore model(random_gmm(rng, 3, 2));
      const int t = random_step(rng, schedule);
      const Tensor x = rng.gaussian({3});
      const X0Estimate est = estimate_x0_map(schedule, model, x, t, GuidanceConfig{});
      const Tensor s = model.eval(x, t, schedule);
      const double abar = schedule.alpha_bar(t);
      Tensor expect = x;
      expect *= 1.0 / std::sqrt(abar);
      expect.add_scaled(s, -std::sqrt(1.0 - abar) / abar);
      worst = std::max(worst, max_abs(est.x_hat - expect) / std::max(1.0, max_abs(expect)));
    }
    return worst;
  }});

  suites.push_back({"stationarity", 1e-10, [schedule] {
    SeededGenerator rng(303);
    double worst = 0.0;
    const GmmPrior prior = GmmPrior::standard_normal(2);
    const GmmScore model(prior);
    for (int i = 0; i < 100; ++i) {
      const int t = random_step(rng, schedule);
      const Tensor x = rng.gaussian({2});
      GuidanceConfig cfg;
      cfg.q2_tracks_zeta = true;
      const X0Estimate est = estimate_x0_map(schedule, model, x, t, cfg);
      worst = std::max(worst, max_abs(map_stationarity_residual(prior, schedule, x, t, est.x_hat)));
    }
    return worst;
  }});

  suites.push_back({"gmm_vjp", 1e-5, [schedule] {
    SeededGenerator rng(404);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const GmmScore model(random_gmm(rng, 3, 3));
      const int t = random_step(rng, schedule);
      const Tensor x = rng.gaussian({3});
      const Tensor v = rng.gaussian({3});
      const Tensor fd = finite_diff_jacobian_vjp([&](const Tensor& p) { return model.eval(p, t, schedule); }, x, v, 1e-5);
      worst = std::max(worst, rel_err(model.vjp(x, t, v, schedule), fd));
    }
    return worst;
  }});

  suites.push_back({"estimate_vjp", 1e-5, [schedule] {
    SeededGenerator rng(505);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const GmmScore model(random_gmm(rng, 3, 2));
      const int t = random_step(rng, schedule);
      const Tensor x = rng.gaussian({3});
      const Tensor v = rng.gaussian({3});
      GuidanceConfig cfg;
      cfg.q1 = 2.0;
      cfg.q2 = 0.5;
      const X0Estimate est = estimate_x0_map(schedule, model, x, t, cfg);
      const Tensor exact = x0_estimate_vjp(schedule, model, est, x, v, cfg);
      const Tensor fd = finite_diff_jacobian_vjp(
          [&](const Tensor& p) { return estimate_x0_map(schedule, model, p, t, cfg).x_hat; }, x, v, 1e-5);
      worst = std::max(worst, rel_err(exact, fd));
    }
    return worst;
  }});

  suites.push_back({"mlp_vjp", 1e-4, [schedule] {
    SeededGenerator rng(606);
    MlpScoreNet net(4, {16, 16}, 2);
    net.initialize(rng, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const int t = random_step(rng, schedule);
      const Tensor x = rng.gaussian({4});
      const Tensor v = rng.gaussian({4});
      const Tensor fd = finite_diff_jacobian_vjp([&](const Tensor& p) { return net.eval(p, t, schedule); }, x, v, 1e-5);
      worst = std::max(worst, rel_err(net.vjp(x, t, v, schedule), fd));
    }
    return worst;
  }});

  suites.push_back({"operator_adjoint", 1e-10, [] {
    SeededGenerator rng(707);
    const ImageMeta meta{8, 8, 1};
    std::vector<double> pattern_values(64);
    for (double& p : pattern_values) p = rng.uniform() < 0.3 ? 1.0 : 0.0;
    pattern_values[0] = 0.0;
    const std::vector<LinearOperator> ops = {
        make_identity(meta.shape()), make_box_mask(meta, 2, 2, 4, 4),
        make_pattern_mask(meta, Tensor({8, 8}, pattern_values)),
        make_downsample(meta, 2, DownsampleKernel::block_average), make_downsample(meta, 2, DownsampleKernel::bicubic)};
    double worst = 0.0;
    for (const auto& op : ops) {
      for (int i = 0; i < 100; ++i) {
        const Tensor x = rng.gaussian(op.in_shape());
        const Tensor y = rng.gaussian(op.out_shape());
        const double lhs = dot(op.apply(x), y);
        const double rhs = dot(x, op.adjoint(y));
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
      }
    }
    return worst;
  }});

  suites.push_back({"conjugate_posterior", 1e-3, [] {
    const GmmPrior prior = GmmPrior::standard_normal(2);
    const LinearOperator op = make_matrix(1, 2, {1.0, 0.0});
    const Tensor y = Tensor::vector({2.0});
    const GaussianPosterior exact =
        gaussian_posterior(Tensor({2}), Eigen::MatrixXd::Identity(2, 2), op, y, 0.5);
    const GridPosterior grid(prior, op, y, 0.5, GridSpec{-6.0, 6.0, 241});
    const Tensor gm = grid.mean();
    double worst = std::abs(exact.mean[0] - 1.6);
    worst = std::max(worst, max_abs(gm - exact.mean));
    worst = std::max(worst, std::abs(grid.variance()[0] - exact.covariance(0, 0)));
    return worst;
  }});

  suites.push_back({"guided_linearity", 1e-12, [schedule] {
    SeededGenerator rng(808);
    const GmmScore model(random_gmm(rng, 4, 2));
    const LinearOperator op = make_mask(4, {0, 2, 3});
    GuidanceConfig cfg;
    cfg.q1 = 1.0;
    cfg.q2 = 3.0;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const int t = random_step(rng, schedule);
      const Tensor x = rng.gaussian({4});
      const Measurement m{rng.gaussian({3}), 0.3, op};
      const X0Estimate est = estimate_x0_map(schedule, model, x, t, cfg);
      const Tensor r1 = rng.gaussian({3});
      const Tensor r2 = rng.gaussian({3});
      const double a = rng.gaussian(), b = rng.gaussian();
      Tensor mix = a * r1;
      mix.add_scaled(r2, b);
      Tensor expect = a * guided_term_for_residual(schedule, model, est, x, r1, m, cfg);
      expect.add_scaled(guided_term_for_residual(schedule, model, est, x, r2, m, cfg), b);
      const Tensor got = guided_term_for_residual(schedule, model, est, x, mix, m, cfg);
      worst = std::max(worst, max_abs(got - expect) / std::max(1.0, max_abs(expect)));
    }
    return worst;
  }});

  return suites;
}

}  // namespace

std::vector<std::string> oracle_suite_names() {
  std::vector<std::string> names;
  for (const auto& s : make_suites()) names.push_back(s.name);
  return names;
}

std::vector<SuiteResult> run_oracle_checks(const std::string& inject_fault) {
  const auto suites = make_suites();
  if (!inject_fault.empty() &&
      std::none_of(suites.begin(), suites.end(), [&](const Suite& s) { return s.name == inject_fault; })) {
    throw InvalidArgument("unknown suite for fault injection: " + inject_fault);
  }
  std::vector<SuiteResult> results;
  for (const auto& suite : suites) {
    SuiteResult r;
    r.name = suite.name;
    r.tolerance = suite.name == inject_fault ? -1.0 : suite.tolerance;
    try {
      r.error = suite.worst_error();
      r.passed = std::isfinite(r.error) && r.error <= r.tolerance;
    } catch (const std::exception& e) {
      r.passed = false;
      r.error = std::numeric_limits<double>::quiet_NaN();
      r.detail = e.what();
    }
    results.push_back(r);
  }
  return results;
}

}  // namespace gdiff
