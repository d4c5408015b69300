// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "gdiff/tensor.hpp"

namespace gdiff {

/// How the reverse-step noise scale is derived from the betas.
enum class SigmaMode {
  beta,        ///< sigma_t = sqrt(beta_t)
  beta_tilde,  ///< sigma_t = sqrt(beta_t (1 - abar_{t-1}) / (1 - abar_t))
};

/// Unit of the scalar time that multiplies beta_t in the MAP estimator.
enum class TimeUnit {
  normalized,  ///< t / T, in (0, 1]
  index,       ///< the raw step index t
};

/**
 * Discrete variance-preserving noise schedule over steps t = 1..T.
 *
 * All accessors take the 1-based step index. abar is the running product
 * of alpha and zeta = 1 - abar is the marginal noise variance. Immutable
 * after construction.
 */
class NoiseSchedule {
 public:
  /// Linear betas from beta_start to beta_end (inclusive). With
  /// deterministic_last_step, sigma_1 is forced to 0 in either mode.
  static NoiseSchedule linear(int steps, double beta_start, double beta_end,
                              SigmaMode sigma_mode = SigmaMode::beta_tilde,
                              TimeUnit time_unit = TimeUnit::normalized,
                              bool deterministic_last_step = true);

  /// Arbitrary betas in (0,1), listed for t = 1..T.
  static NoiseSchedule from_betas(std::vector<double> betas,
                                  SigmaMode sigma_mode = SigmaMode::beta_tilde,
                                  TimeUnit time_unit = TimeUnit::normalized,
                                  bool deterministic_last_step = true);

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_[index(t)]; }
  double alpha(int t) const { return alpha_[index(t)]; }
  double alpha_bar(int t) const { return alpha_bar_[index(t)]; }
  double zeta(int t) const { return zeta_[index(t)]; }
  double sigma_tilde(int t) const { return sigma_tilde_[index(t)]; }

  /// The time scalar that multiplies beta_t, per the configured unit.
  double time_scalar(int t) const;

  SigmaMode sigma_mode() const { return sigma_mode_; }
  TimeUnit time_unit() const { return time_unit_; }

  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }
  const std::vector<double>& zetas() const { return zeta_; }

  /// Throws InvalidArgument unless 1 <= t <= T.
  void check_step(int t) const;

 private:
  NoiseSchedule() = default;
  std::size_t index(int t) const {
    check_step(t);
    return static_cast<std::size_t>(t - 1);
  }

  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
  std::vector<double> zeta_;
  std::vector<double> sigma_tilde_;
  SigmaMode sigma_mode_ = SigmaMode::beta_tilde;
  TimeUnit time_unit_ = TimeUnit::normalized;
};

/// sqrt(abar_t) x0 + sqrt(zeta_t) eps
Tensor forward_marginal_sample(const NoiseSchedule& schedule, const Tensor& x0, int t, const Tensor& eps);

}  // namespace gdiff
