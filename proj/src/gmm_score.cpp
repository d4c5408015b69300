// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/gmm_score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "gdiff/error.hpp"

namespace gdiff {

void GmmPrior::validate() const {
  const std::size_t k = weights.size();
  if (k == 0) throw InvalidArgument("GMM prior needs at least one component");
  if (means.size() != k || variances.size() != k) throw InvalidArgument("GMM prior: component count mismatch");
  const std::size_t d = means.front().size();
  if (d == 0) throw InvalidArgument("GMM prior: zero-dimensional means");
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (means[i].size() != d) throw InvalidArgument("GMM prior: means differ in dimension");
    if (!all_finite(means[i])) throw InvalidArgument("GMM prior: non-finite mean");
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) throw InvalidArgument("GMM prior: weights must be positive");
    if (!(variances[i] > 0.0) || !std::isfinite(variances[i])) {
      throw InvalidArgument("GMM prior: variances must be positive");
    }
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("GMM prior: weights must sum to 1");
}

GmmPrior GmmPrior::standard_normal(std::size_t dim) {
  return GmmPrior{{1.0}, {std::vector<double>(dim, 0.0)}, {1.0}};
}

double GmmPrior::log_density(std::span<const double> x, double alpha_bar) const {
  const std::size_t d = dimension();
  if (x.size() != d) throw InvalidArgument("GmmPrior::log_density: dimension mismatch");
  const double a = std::sqrt(alpha_bar);
  std::vector<double> logs(components());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < components(); ++k) {
    const double s = alpha_bar * variances[k] + (1.0 - alpha_bar);
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = x[i] - a * means[k][i];
      sq += diff * diff;
    }
    logs[k] = std::log(weights[k]) - 0.5 * d * std::log(2.0 * std::numbers::pi * s) - 0.5 * sq / s;
    top = std::max(top, logs[k]);
  }
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - top);
  return top + std::log(acc);
}

// Per-component log-gradients g_k = -(x - a mu_k) / s_k, responsibilities r_k,
// and the responsibility-weighted mean gradient.
struct GmmScore::Moments {
  std::vector<double> resp;
  std::vector<double> inv_var;
  std::vector<std::vector<double>> grads;
  std::vector<double> mean_grad;
};

GmmScore::GmmScore(GmmPrior prior) : prior_(std::move(prior)) { prior_.validate(); }

GmmScore::Moments GmmScore::moments(const Tensor& x, double alpha_bar) const {
  const std::size_t d = dimension();
  const std::size_t k_count = prior_.components();
  const double a = std::sqrt(alpha_bar);
  Moments m;
  m.resp.resize(k_count);
  m.inv_var.resize(k_count);
  m.grads.assign(k_count, std::vector<double>(d));
  m.mean_grad.assign(d, 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) {
    const double s = alpha_bar * prior_.variances[k] + (1.0 - alpha_bar);
    m.inv_var[k] = 1.0 / s;
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double diff = x[i] - a * prior_.means[k][i];
      m.grads[k][i] = -diff / s;
      sq += diff * diff;
    }
    m.resp[k] = std::log(prior_.weights[k]) - 0.5 * d * std::log(s) - 0.5 * sq / s;
    top = std::max(top, m.resp[k]);
  }
  double total = 0.0;
  for (double& r : m.resp) {
    r = std::exp(r - top);
    total += r;
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    m.resp[k] /= total;
    for (std::size_t i = 0; i < d; ++i) m.mean_grad[i] += m.resp[k] * m.grads[k][i];
  }
  return m;
}

Tensor GmmScore::log_density_gradient(const Tensor& x, double alpha_bar) const {
  if (x.size() != dimension()) throw InvalidArgument("GmmScore: dimension mismatch");
  require_finite(x, "GmmScore input");
  const Moments m = moments(x, alpha_bar);
  return Tensor(x.shape(), m.mean_grad);
}

Tensor GmmScore::eval(const Tensor& x, int t, const NoiseSchedule& schedule) const {
  check_input(x, t, schedule);
  const Moments m = moments(x, schedule.alpha_bar(t));
  Tensor out(x.shape(), m.mean_grad);
  out *= -std::sqrt(schedule.zeta(t));
  require_finite(out, "GmmScore::eval");
  return out;
}

namespace {

// -sqrt(zeta) * Hess(log p) v, where
// Hess = -sum_k r_k I / s_k + sum_k r_k g_k g_k^T - gbar gbar^T (symmetric).
template <class MomentsT>
Tensor gmm_pullback(const MomentsT& m, const Tensor& v, double sqrt_zeta) {
  const std::size_t d = v.size();
  std::vector<double> hv(d, 0.0);
  for (std::size_t k = 0; k < m.resp.size(); ++k) {
    double gv = 0.0;
    for (std::size_t i = 0; i < d; ++i) gv += m.grads[k][i] * v[i];
    for (std::size_t i = 0; i < d; ++i) hv[i] += m.resp[k] * (m.grads[k][i] * gv - m.inv_var[k] * v[i]);
  }
  double mv = 0.0;
  for (std::size_t i = 0; i < d; ++i) mv += m.mean_grad[i] * v[i];
  Tensor out(v.shape());
  for (std::size_t i = 0; i < d; ++i) out[i] = -sqrt_zeta * (hv[i] - m.mean_grad[i] * mv);
  require_finite(out, "GmmScore::vjp");
  return out;
}

}  // namespace

Tensor GmmScore::vjp(const Tensor& x, int t, const Tensor& v, const NoiseSchedule& schedule) const {
  check_input(x, t, schedule);
  require_same_size(x, v, "GmmScore::vjp");
  require_finite(v, "GmmScore::vjp cotangent");
  return gmm_pullback(moments(x, schedule.alpha_bar(t)), v, std::sqrt(schedule.zeta(t)));
}

Linearization GmmScore::linearize(const Tensor& x, int t, const NoiseSchedule& schedule) const {
  check_input(x, t, schedule);
  auto m = std::make_shared<const Moments>(moments(x, schedule.alpha_bar(t)));
  const double sqrt_zeta = std::sqrt(schedule.zeta(t));
  Linearization lin;
  lin.value = Tensor(x.shape(), m->mean_grad);
  lin.value *= -sqrt_zeta;
  require_finite(lin.value, "GmmScore::eval");
  const std::size_t n = x.size();
  lin.pullback = [m, sqrt_zeta, n](const Tensor& v) {
    if (v.size() != n) throw InvalidArgument("GmmScore pullback: size mismatch");
    return gmm_pullback(*m, v, sqrt_zeta);
  };
  return lin;
}

}  // namespace gdiff
