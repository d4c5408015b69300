// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/score.hpp"

#include <cmath>
#include <string>

#include "gdiff/error.hpp"

namespace gdiff {

Linearization ScoreModel::linearize(const Tensor& x, int t, const NoiseSchedule& schedule) const {
  Linearization lin;
  lin.value = eval(x, t, schedule);
  lin.pullback = [this, x, t, &schedule](const Tensor& v) { return vjp(x, t, v, schedule); };
  return lin;
}

void ScoreModel::check_input(const Tensor& x, int t, const NoiseSchedule& schedule) const {
  if (x.size() != dimension()) {
    throw InvalidArgument("score model expects " + std::to_string(dimension()) + " inputs, got " +
                          std::to_string(x.size()));
  }
  schedule.check_step(t);
  require_finite(x, "score model input");
}

AffineScore::AffineScore(std::size_t n, std::vector<double> matrix, std::vector<double> offset, bool schedule_scaled)
    : n_(n), matrix_(std::move(matrix)), offset_(std::move(offset)), schedule_scaled_(schedule_scaled) {
  if (n_ == 0 || matrix_.size() != n_ * n_ || offset_.size() != n_) {
    throw InvalidArgument("AffineScore: inconsistent dimensions");
  }
}

AffineScore AffineScore::identity(std::size_t n, bool schedule_scaled) {
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 1.0;
  return AffineScore(n, std::move(m), std::vector<double>(n, 0.0), schedule_scaled);
}

double AffineScore::scale(int t, const NoiseSchedule& schedule) const {
  return schedule_scaled_ ? 1.0 / std::sqrt(schedule.zeta(t)) : 1.0;
}

Tensor AffineScore::eval(const Tensor& x, int t, const NoiseSchedule& schedule) const {
  check_input(x, t, schedule);
  const double s = scale(t, schedule);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = offset_[i];
    for (std::size_t j = 0; j < n_; ++j) acc += matrix_[i * n_ + j] * x[j];
    out[i] = s * acc;
  }
  return out;
}

Tensor AffineScore::vjp(const Tensor& x, int t, const Tensor& v, const NoiseSchedule& schedule) const {
  check_input(x, t, schedule);
  require_same_size(x, v, "AffineScore::vjp");
  const double s = scale(t, schedule);
  Tensor out(x.shape());
  for (std::size_t j = 0; j < n_; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) acc += v[i] * matrix_[i * n_ + j];
    out[j] = s * acc;
  }
  return out;
}

Tensor ZeroScore::eval(const Tensor& x, int t, const NoiseSchedule& schedule) const {
  check_input(x, t, schedule);
  return Tensor(x.shape());
}

Tensor ZeroScore::vjp(const Tensor& x, int t, const Tensor& v, const NoiseSchedule& schedule) const {
  check_input(x, t, schedule);
  require_same_size(x, v, "ZeroScore::vjp");
  return Tensor(x.shape());
}

}  // namespace gdiff
