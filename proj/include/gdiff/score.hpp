// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "gdiff/schedule.hpp"
#include "gdiff/tensor.hpp"

namespace gdiff {

/// Output of one network evaluation together with its pullback
/// (v -> v^T J) at the evaluation point. Calling the pullback reuses the
/// forward pass and is not a new function evaluation.
struct Linearization {
  Tensor value;
  std::function<Tensor(const Tensor&)> pullback;
};

/**
 * Noise-prediction model S(x, t) under the epsilon convention:
 * S(x, t) = -sqrt(zeta_t) * grad log p_t(x).
 *
 * Implementations are immutable once built and safe to share between
 * sampling chains running on different threads.
 */
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  /// Number of entries of x the model consumes.
  virtual std::size_t dimension() const = 0;

  virtual Tensor eval(const Tensor& x, int t, const NoiseSchedule& schedule) const = 0;

  /// v^T (d eval / d x) at (x, t).
  virtual Tensor vjp(const Tensor& x, int t, const Tensor& v, const NoiseSchedule& schedule) const = 0;

  /// One evaluation plus a pullback bound to it. The default calls eval
  /// and defers to vjp, which may recompute the forward pass.
  virtual Linearization linearize(const Tensor& x, int t, const NoiseSchedule& schedule) const;

 protected:
  void check_input(const Tensor& x, int t, const NoiseSchedule& schedule) const;
};

/**
 * S(x, t) = scale_t * (A x + c), with scale_t = 1 / sqrt(zeta_t) when
 * `schedule_scaled` is set and 1 otherwise. Used to build models whose
 * Jacobian is known in closed form (A = I with scaling reproduces
 * grad_x S = I / sqrt(zeta_t) exactly).
 */
class AffineScore : public ScoreModel {
 public:
  /// `matrix` is row-major n x n.
  AffineScore(std::size_t n, std::vector<double> matrix, std::vector<double> offset, bool schedule_scaled);
  static AffineScore identity(std::size_t n, bool schedule_scaled);

  std::size_t dimension() const override { return n_; }
  Tensor eval(const Tensor& x, int t, const NoiseSchedule& schedule) const override;
  Tensor vjp(const Tensor& x, int t, const Tensor& v, const NoiseSchedule& schedule) const override;

 private:
  double scale(int t, const NoiseSchedule& schedule) const;

  std::size_t n_;
  std::vector<double> matrix_;
  std::vector<double> offset_;
  bool schedule_scaled_;
};

/// Always returns zero; handy for reductions in tests.
class ZeroScore : public ScoreModel {
 public:
  explicit ZeroScore(std::size_t n) : n_(n) {}
  std::size_t dimension() const override { return n_; }
  Tensor eval(const Tensor& x, int t, const NoiseSchedule& schedule) const override;
  Tensor vjp(const Tensor& x, int t, const Tensor& v, const NoiseSchedule& schedule) const override;

 private:
  std::size_t n_;
};

}  // namespace gdiff
