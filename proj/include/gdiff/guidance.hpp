// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "gdiff/operators.hpp"
#include "gdiff/schedule.hpp"
#include "gdiff/score.hpp"

namespace gdiff {

enum class Estimator {
  map,      ///< Taylor-corrected MAP estimate with weights q1, q2
  tweedie,  ///< posterior-mean baseline (x - sqrt(zeta) S) / sqrt(abar)
};

enum class JacobianMode {
  exact_vjp,          ///< c_x v - c_s (v^T dS/dx)
  schedule_identity,  ///< dS/dx replaced by I / sqrt(zeta_t)
  finite_difference,  ///< central differences of x_hat; test oracle only
};

struct GuidanceConfig {
  double q1 = 0.0;
  double q2 = 0.0;
  /// Use q2 = zeta_t at every step instead of the constant q2.
  bool q2_tracks_zeta = false;
  /// Zero disables the guided term.
  double eta = 1.0;
  Estimator estimator = Estimator::map;
  JacobianMode jacobian_mode = JacobianMode::exact_vjp;
  double fd_step = 1e-5;
  /// Clamp x_hat to [0,1] before forming the residual (Jacobian unchanged).
  bool clamp_x0 = false;

  /// q2 in effect at step t.
  double q2_at(const NoiseSchedule& schedule, int t) const;
  /// Throws InvalidArgument for eta < 0, q2 < 0, fd_step <= 0 or a
  /// vanishing MAP denominator at some step.
  void validate(const NoiseSchedule& schedule) const;
};

/// x_hat = c_x x_t - c_s S(x_t, t), with the coefficients kept for Jacobian assembly.
struct X0Estimate {
  Tensor x_hat;
  int t = 0;
  double c_x = 0.0;
  double c_s = 0.0;
};

struct EstimateCoefficients {
  double c_x;
  double c_s;
};

/// c_x = (sqrt(abar) + q1 tau beta / 2 + q2) / (abar + q2),
/// c_s = (sqrt(1-abar) + q1 tau beta / (2 sqrt(1-abar))) / (abar + q2),
/// with tau the schedule's time scalar.
EstimateCoefficients map_coefficients(const NoiseSchedule& schedule, int t, double q1, double q2);
EstimateCoefficients tweedie_coefficients(const NoiseSchedule& schedule, int t);
EstimateCoefficients estimate_coefficients(const NoiseSchedule& schedule, int t, const GuidanceConfig& config);

/// Forms the estimate from an already evaluated score.
X0Estimate combine_estimate(const Tensor& x_t, const Tensor& score, int t, EstimateCoefficients coeffs);

X0Estimate estimate_x0_map(const NoiseSchedule& schedule, const ScoreModel& model, const Tensor& x_t, int t,
                           const GuidanceConfig& config);
X0Estimate estimate_x0_tweedie(const NoiseSchedule& schedule, const ScoreModel& model, const Tensor& x_t, int t);
/// Dispatches on config.estimator.
X0Estimate estimate_x0(const NoiseSchedule& schedule, const ScoreModel& model, const Tensor& x_t, int t,
                       const GuidanceConfig& config);

/**
 * v^T (d x_hat / d x_t) under config.jacobian_mode. `pullback` is the
 * score model's vjp at (x_t, t) when available (exact mode reuses it);
 * otherwise exact mode calls model.vjp. Finite-difference mode adds
 * 2 * dim(x) score evaluations to *extra_evals when given.
 */
Tensor x0_estimate_vjp(const NoiseSchedule& schedule, const ScoreModel& model, const X0Estimate& estimate,
                       const Tensor& x_t, const Tensor& v, const GuidanceConfig& config,
                       const Linearization* linearization = nullptr, long* extra_evals = nullptr);

/// (1 / sigma_y^2) * (v^T d x_hat / d x_t) with v = H^T residual.
Tensor guided_term_for_residual(const NoiseSchedule& schedule, const ScoreModel& model, const X0Estimate& estimate,
                                const Tensor& x_t, const Tensor& residual, const Measurement& measurement,
                                const GuidanceConfig& config, const Linearization* linearization = nullptr,
                                long* extra_evals = nullptr);

/// Guided term (1/sigma_y^2) (H dx_hat/dx_t)^T (y - H x_hat) from a shared evaluation.
Tensor guided_term_from(const NoiseSchedule& schedule, const ScoreModel& model, const Linearization& linearization,
                        const Tensor& x_t, int t, const Measurement& measurement, const GuidanceConfig& config,
                        long* extra_evals = nullptr);

/// Convenience form that evaluates the model itself.
Tensor guided_term(const NoiseSchedule& schedule, const ScoreModel& model, const Tensor& x_t, int t,
                   const Measurement& measurement, const GuidanceConfig& config);

}  // namespace gdiff
