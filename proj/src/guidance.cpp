// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gdiff/error.hpp"

namespace gdiff {

namespace {

constexpr double kMinDenominator = 1e-12;

}  // namespace

double GuidanceConfig::q2_at(const NoiseSchedule& schedule, int t) const {
  return q2_tracks_zeta ? schedule.zeta(t) : q2;
}

void GuidanceConfig::validate(const NoiseSchedule& schedule) const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidArgument("guidance: eta must be non-negative");
  if (!std::isfinite(q1) || !std::isfinite(q2)) throw InvalidArgument("guidance: q1, q2 must be finite");
  if (q2 < 0.0) throw InvalidArgument("guidance: q2 must be non-negative");
  if (!(fd_step > 0.0)) throw InvalidArgument("guidance: finite-difference step must be positive");
  if (estimator == Estimator::map) {
    for (int t = 1; t <= schedule.steps(); ++t) {
      if (std::abs(schedule.alpha_bar(t) + q2_at(schedule, t)) < kMinDenominator) {
        throw InvalidArgument("guidance: abar_t + q2 vanishes at t = " + std::to_string(t));
      }
    }
  }
}

EstimateCoefficients map_coefficients(const NoiseSchedule& schedule, int t, double q1, double q2) {
  const double abar = schedule.alpha_bar(t);
  const double denom = abar + q2;
  if (std::abs(denom) < kMinDenominator) {
    throw NumericError("MAP estimate: abar_t + q2 vanishes at t = " + std::to_string(t));
  }
  const double time_beta = q1 * schedule.time_scalar(t) * schedule.beta(t) / 2.0;
  const double root_zeta = std::sqrt(1.0 - abar);
  return {(std::sqrt(abar) + time_beta + q2) / denom, (root_zeta + time_beta / root_zeta) / denom};
}

EstimateCoefficients tweedie_coefficients(const NoiseSchedule& schedule, int t) {
  const double root_abar = std::sqrt(schedule.alpha_bar(t));
  return {1.0 / root_abar, std::sqrt(schedule.zeta(t)) / root_abar};
}

EstimateCoefficients estimate_coefficients(const NoiseSchedule& schedule, int t, const GuidanceConfig& config) {
  if (config.estimator == Estimator::tweedie) return tweedie_coefficients(schedule, t);
  return map_coefficients(schedule, t, config.q1, config.q2_at(schedule, t));
}

X0Estimate combine_estimate(const Tensor& x_t, const Tensor& score, int t, EstimateCoefficients coeffs) {
  require_same_size(x_t, score, "x0 estimate");
  require_finite(score, "x0 estimate score");
  X0Estimate est{x_t, t, coeffs.c_x, coeffs.c_s};
  est.x_hat *= coeffs.c_x;
  est.x_hat.add_scaled(score, -coeffs.c_s);
  require_finite(est.x_hat, "x0 estimate");
  return est;
}

X0Estimate estimate_x0_map(const NoiseSchedule& schedule, const ScoreModel& model, const Tensor& x_t, int t,
                           const GuidanceConfig& config) {
  const auto coeffs = map_coefficients(schedule, t, config.q1, config.q2_at(schedule, t));
  return combine_estimate(x_t, model.eval(x_t, t, schedule), t, coeffs);
}

X0Estimate estimate_x0_tweedie(const NoiseSchedule& schedule, const ScoreModel& model, const Tensor& x_t, int t) {
  return combine_estimate(x_t, model.eval(x_t, t, schedule), t, tweedie_coefficients(schedule, t));
}

X0Estimate estimate_x0(const NoiseSchedule& schedule, const ScoreModel& model, const Tensor& x_t, int t,
                       const GuidanceConfig& config) {
  return config.estimator == Estimator::tweedie ? estimate_x0_tweedie(schedule, model, x_t, t)
                                                : estimate_x0_map(schedule, model, x_t, t, config);
}

Tensor x0_estimate_vjp(const NoiseSchedule& schedule, const ScoreModel& model, const X0Estimate& estimate,
                       const Tensor& x_t, const Tensor& v, const GuidanceConfig& config,
                       const Linearization* linearization, long* extra_evals) {
  require_same_size(estimate.x_hat, v, "x0_estimate_vjp");
  require_finite(v, "x0_estimate_vjp cotangent");
  const int t = estimate.t;
  Tensor out;
  switch (config.jacobian_mode) {
    case JacobianMode::exact_vjp: {
      const Tensor sv = linearization != nullptr ? linearization->pullback(v) : model.vjp(x_t, t, v, schedule);
      out = v;
      out *= estimate.c_x;
      out.add_scaled(sv, -estimate.c_s);
      break;
    }
    case JacobianMode::schedule_identity: {
      out = v;
      out *= estimate.c_x - estimate.c_s / std::sqrt(schedule.zeta(t));
      break;
    }
    case JacobianMode::finite_difference: {
      // (v^T J)_i = <v, (x_hat(x + h e_i) - x_hat(x - h e_i)) / 2h>
      const EstimateCoefficients coeffs{estimate.c_x, estimate.c_s};
      const double h = config.fd_step;
      out = Tensor(x_t.shape());
      Tensor probe = x_t;
      for (std::size_t i = 0; i < x_t.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + h;
        const Tensor plus = combine_estimate(probe, model.eval(probe, t, schedule), t, coeffs).x_hat;
        probe[i] = saved - h;
        const Tensor minus = combine_estimate(probe, model.eval(probe, t, schedule), t, coeffs).x_hat;
        probe[i] = saved;
        out[i] = (dot(v, plus) - dot(v, minus)) / (2.0 * h);
      }
      if (extra_evals != nullptr) *extra_evals += 2 * static_cast<long>(x_t.size());
      break;
    }
  }
  require_finite(out, "x0_estimate_vjp");
  return out;
}

Tensor guided_term_for_residual(const NoiseSchedule& schedule, const ScoreModel& model, const X0Estimate& estimate,
                                const Tensor& x_t, const Tensor& residual, const Measurement& measurement,
                                const GuidanceConfig& config, const Linearization* linearization,
                                long* extra_evals) {
  if (!(measurement.sigma_y > 0.0)) throw InvalidArgument("guided term: sigma_y must be positive");
  Tensor g = x0_estimate_vjp(schedule, model, estimate, x_t, measurement.op.adjoint(residual), config,
                             linearization, extra_evals);
  g *= 1.0 / (measurement.sigma_y * measurement.sigma_y);
  return g.reshaped(x_t.shape());
}

Tensor guided_term_from(const NoiseSchedule& schedule, const ScoreModel& model, const Linearization& linearization,
                        const Tensor& x_t, int t, const Measurement& measurement, const GuidanceConfig& config,
                        long* extra_evals) {
  if (measurement.op.in_dim() != x_t.size() || measurement.op.out_dim() != measurement.y.size()) {
    throw InvalidArgument("guided term: operator does not match state or measurement dimensions");
  }
  X0Estimate est = combine_estimate(x_t, linearization.value, t, estimate_coefficients(schedule, t, config));
  Tensor fitted = est.x_hat;
  if (config.clamp_x0) {
    for (double& v : fitted.data()) v = std::clamp(v, 0.0, 1.0);
  }
  Tensor residual = measurement.y - measurement.op.apply(fitted);
  return guided_term_for_residual(schedule, model, est, x_t, residual, measurement, config, &linearization,
                                  extra_evals);
}

Tensor guided_term(const NoiseSchedule& schedule, const ScoreModel& model, const Tensor& x_t, int t,
                   const Measurement& measurement, const GuidanceConfig& config) {
  const Linearization lin = model.linearize(x_t, t, schedule);
  return guided_term_from(schedule, model, lin, x_t, t, measurement, config);
}

}  // namespace gdiff
