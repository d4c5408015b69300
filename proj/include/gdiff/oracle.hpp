// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gdiff/gmm_score.hpp"
#include "gdiff/operators.hpp"
#include "gdiff/schedule.hpp"

namespace gdiff {

/// Dense oracles are capped at this dimension.
inline constexpr std::size_t kOracleMaxDim = 64;

/// Materializes H by applying the operator to basis vectors (in_dim <= 64).
Eigen::MatrixXd operator_matrix(const LinearOperator& op);

struct GaussianPosterior {
  Tensor mean;
  Eigen::MatrixXd covariance;
};

/// Conjugate update of N(prior_mean, prior_cov) by y = H x + N(0, sigma_y^2 I).
GaussianPosterior gaussian_posterior(const Tensor& prior_mean, const Eigen::MatrixXd& prior_cov,
                                     const LinearOperator& op, const Tensor& y, double sigma_y);

/// Regular grid on [lower, upper] per axis with `points` nodes (inclusive).
struct GridSpec {
  double lower = -6.0;
  double upper = 6.0;
  std::size_t points = 401;
};

/**
 * Posterior density of a GMM prior under a linear Gaussian likelihood,
 * tabulated on a grid in one or two dimensions and normalized with the
 * trapezoid rule. Construction fails when the grid holds less than 99%
 * (or more than 101%) of the exact evidence, i.e. when bounds are too
 * tight or the grid is too coarse.
 */
class GridPosterior {
 public:
  GridPosterior(const GmmPrior& prior, const LinearOperator& op, const Tensor& y, double sigma_y, GridSpec spec);

  std::size_t dimension() const { return dim_; }
  const std::vector<double>& axis() const { return axis_; }
  /// Normalized density values, row-major over (x0, x1).
  const std::vector<double>& density() const { return density_; }
  /// Grid integral divided by the exact evidence.
  double captured_mass() const { return captured_mass_; }

  Tensor mean() const;
  Tensor variance() const;
  /// Trapezoid-normalized marginal density along `axis_index`.
  std::vector<double> marginal(std::size_t axis_index) const;
  /// Posterior probability of {x[axis_index] < threshold}.
  double mass_below(std::size_t axis_index, double threshold) const;
  /// 1D Wasserstein-1 distance between the marginal and an empirical sample,
  /// matching sorted samples to marginal quantiles at levels (i + 1/2) / n.
  double w1_distance(std::size_t axis_index, std::vector<double> samples) const;

  double spacing() const { return spacing_; }

 private:
  std::vector<double> marginal_cdf(std::size_t axis_index) const;

  std::size_t dim_;
  std::vector<double> axis_;
  double spacing_;
  std::vector<double> density_;
  double captured_mass_ = 0.0;
};

GridPosterior grid_posterior(const GmmPrior& prior, const LinearOperator& op, const Tensor& y, double sigma_y,
                             GridSpec spec = {});

/// log p(y) for a GMM prior and y = H x + N(0, sigma_y^2 I); closed form.
double gmm_log_evidence(const GmmPrior& prior, const LinearOperator& op, const Tensor& y, double sigma_y);

using VectorFunction = std::function<Tensor(const Tensor&)>;

/// v^T J_f(x) by central differences, one coordinate at a time.
Tensor finite_diff_jacobian_vjp(const VectorFunction& f, const Tensor& x, const Tensor& v, double step);

/// -sqrt(abar_t) (sqrt(abar_t) x_hat - x_t) / zeta_t + grad log p_0(x_hat), exact GMM data score.
Tensor map_stationarity_residual(const GmmPrior& prior, const NoiseSchedule& schedule, const Tensor& x_t, int t,
                                 const Tensor& x_hat);

/// Same residual with grad log p_0 approximated by S(x_hat, 1) / (-sqrt(zeta_1)).
Tensor map_stationarity_residual(const ScoreModel& model, const NoiseSchedule& schedule, const Tensor& x_t, int t,
                                 const Tensor& x_hat);

struct Q2Fit {
  double q2;
  double residual_norm;
};

/// With q1 = 0, chooses q2 in [0, q2_max] minimizing the stationarity
/// residual norm of the MAP estimate (model evaluated once at (x_t, t)).
Q2Fit tune_q2_for_stationarity(const GmmScore& model, const NoiseSchedule& schedule, const Tensor& x_t, int t,
                               double q2_max = 100.0);

}  // namespace gdiff
