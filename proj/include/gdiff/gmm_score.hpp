// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "gdiff/score.hpp"

namespace gdiff {

/// Mixture of isotropic Gaussians sum_k w_k N(mu_k, sigma_k^2 I).
struct GmmPrior {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  std::vector<double> variances;

  std::size_t components() const { return weights.size(); }
  std::size_t dimension() const { return means.empty() ? 0 : means.front().size(); }

  /// Checks K >= 1, equal mean dimensions, positive weights summing to 1
  /// (within 1e-12) and positive variances.
  void validate() const;

  /// N(0, I) in `dim` dimensions.
  static GmmPrior standard_normal(std::size_t dim);

  /// log of the diffused density p_t(x) = sum_k w_k N(sqrt(abar) mu_k, (abar s_k^2 + 1 - abar) I).
  /// abar = 1 gives the clean prior.
  double log_density(std::span<const double> x, double alpha_bar) const;
};

/**
 * Exact epsilon-prediction score of a diffused Gaussian mixture.
 *
 * The diffused marginal is again a mixture, so the score and its
 * Jacobian (through the mixture Hessian) are closed-form. Component
 * responsibilities use log-sum-exp, which keeps the result finite for
 * inputs far from every mode.
 */
class GmmScore : public ScoreModel {
 public:
  explicit GmmScore(GmmPrior prior);

  const GmmPrior& prior() const { return prior_; }

  std::size_t dimension() const override { return prior_.dimension(); }
  Tensor eval(const Tensor& x, int t, const NoiseSchedule& schedule) const override;
  Tensor vjp(const Tensor& x, int t, const Tensor& v, const NoiseSchedule& schedule) const override;
  Linearization linearize(const Tensor& x, int t, const NoiseSchedule& schedule) const override;

  /// grad log p(x) of the diffused density at noise level abar (abar = 1: clean prior).
  Tensor log_density_gradient(const Tensor& x, double alpha_bar) const;
  /// Clean-data score grad log p_0(x).
  Tensor data_score(const Tensor& x) const { return log_density_gradient(x, 1.0); }

 private:
  struct Moments;
  Moments moments(const Tensor& x, double alpha_bar) const;

  GmmPrior prior_;
};

}  // namespace gdiff
