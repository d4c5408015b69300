// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/schedule.hpp"

#include <cmath>
#include <string>

#include "gdiff/error.hpp"

namespace gdiff {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end, SigmaMode sigma_mode,
                                    TimeUnit time_unit, bool deterministic_last_step) {
  if (steps < 1) throw InvalidArgument("schedule: T must be at least 1");
  if (!(beta_start > 0.0 && beta_start < 1.0 && beta_end > 0.0 && beta_end < 1.0)) {
    throw InvalidArgument("schedule: beta bounds must lie in (0,1)");
  }
  if (beta_start > beta_end) throw InvalidArgument("schedule: beta_start exceeds beta_end");
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    betas[static_cast<std::size_t>(i)] = beta_start + frac * (beta_end - beta_start);
  }
  return from_betas(std::move(betas), sigma_mode, time_unit, deterministic_last_step);
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas, SigmaMode sigma_mode, TimeUnit time_unit,
                                        bool deterministic_last_step) {
  if (betas.empty()) throw InvalidArgument("schedule: T must be at least 1");
  NoiseSchedule s;
  s.sigma_mode_ = sigma_mode;
  s.time_unit_ = time_unit;
  const std::size_t n = betas.size();
  s.alpha_.resize(n);
  s.alpha_bar_.resize(n);
  s.zeta_.resize(n);
  s.sigma_tilde_.resize(n);
  double running = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double b = betas[i];
    if (!(b > 0.0 && b < 1.0)) {
      throw InvalidArgument("schedule: beta_" + std::to_string(i + 1) + " outside (0,1)");
    }
    const double prev_alpha_bar = running;
    s.alpha_[i] = 1.0 - b;
    running *= s.alpha_[i];
    s.alpha_bar_[i] = running;
    s.zeta_[i] = 1.0 - running;
    if (sigma_mode == SigmaMode::beta) {
      s.sigma_tilde_[i] = std::sqrt(b);
    } else {
      s.sigma_tilde_[i] = std::sqrt((1.0 - prev_alpha_bar) / (1.0 - running) * b);
    }
  }
  if (deterministic_last_step) s.sigma_tilde_[0] = 0.0;
  s.beta_ = std::move(betas);
  return s;
}

double NoiseSchedule::time_scalar(int t) const {
  check_step(t);
  return time_unit_ == TimeUnit::normalized ? static_cast<double>(t) / steps() : static_cast<double>(t);
}

void NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > steps()) {
    throw InvalidArgument("step index " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
  }
}

Tensor forward_marginal_sample(const NoiseSchedule& schedule, const Tensor& x0, int t, const Tensor& eps) {
  require_same_shape(x0, eps, "forward_marginal_sample");
  const double a = std::sqrt(schedule.alpha_bar(t));
  const double s = std::sqrt(schedule.zeta(t));
  Tensor out = x0;
  out *= a;
  out.add_scaled(eps, s);
  return out;
}

}  // namespace gdiff
