// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "gdiff/error.hpp"
#include "gdiff/guidance.hpp"

namespace gdiff {

Eigen::MatrixXd operator_matrix(const LinearOperator& op) {
  const std::size_t n = op.in_dim();
  if (n > kOracleMaxDim) {
    throw InvalidArgument("oracle: dimension " + std::to_string(n) + " exceeds " + std::to_string(kOracleMaxDim));
  }
  Eigen::MatrixXd h(static_cast<Eigen::Index>(op.out_dim()), static_cast<Eigen::Index>(n));
  Tensor basis({n});
  for (std::size_t j = 0; j < n; ++j) {
    basis[j] = 1.0;
    const Tensor col = op.apply(basis);
    for (std::size_t i = 0; i < col.size(); ++i) h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    basis[j] = 0.0;
  }
  return h;
}

namespace {

Eigen::VectorXd to_eigen(const Tensor& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.data().data(), static_cast<Eigen::Index>(t.size()));
}

}  // namespace

GaussianPosterior gaussian_posterior(const Tensor& prior_mean, const Eigen::MatrixXd& prior_cov,
                                     const LinearOperator& op, const Tensor& y, double sigma_y) {
  const auto d = static_cast<Eigen::Index>(prior_mean.size());
  if (prior_mean.size() > kOracleMaxDim) throw InvalidArgument("gaussian_posterior: dimension exceeds 64");
  if (prior_cov.rows() != d || prior_cov.cols() != d) throw InvalidArgument("gaussian_posterior: covariance shape");
  if (op.in_dim() != prior_mean.size() || op.out_dim() != y.size()) {
    throw InvalidArgument("gaussian_posterior: operator dimensions do not match");
  }
  if (!(sigma_y > 0.0)) throw InvalidArgument("gaussian_posterior: sigma_y must be positive");

  const Eigen::MatrixXd h = operator_matrix(op);
  const Eigen::MatrixXd h_sigma = h * prior_cov;
  Eigen::MatrixXd s = h_sigma * h.transpose();
  s.diagonal().array() += sigma_y * sigma_y;
  const Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) throw NumericError("gaussian_posterior: singular innovation covariance");
  // gain^T = S^{-1} H Sigma
  const Eigen::MatrixXd gain_t = llt.solve(h_sigma);
  const Eigen::VectorXd mu = to_eigen(prior_mean);
  const Eigen::VectorXd innovation = to_eigen(y) - h * mu;
  const Eigen::VectorXd mean = mu + gain_t.transpose() * innovation;
  Eigen::MatrixXd cov = prior_cov - gain_t.transpose() * h_sigma;
  cov = 0.5 * (cov + cov.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) throw NumericError("gaussian_posterior: covariance not PSD");
  return {Tensor(prior_mean.shape(), std::vector<double>(mean.data(), mean.data() + d)), cov};
}

double gmm_log_evidence(const GmmPrior& prior, const LinearOperator& op, const Tensor& y, double sigma_y) {
  prior.validate();
  const Eigen::MatrixXd h = operator_matrix(op);
  const Eigen::MatrixXd hht = h * h.transpose();
  const Eigen::VectorXd yv = to_eigen(y);
  const double m = static_cast<double>(y.size());
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> logs;
  for (std::size_t k = 0; k < prior.components(); ++k) {
    Eigen::MatrixXd cov = prior.variances[k] * hht;
    cov.diagonal().array() += sigma_y * sigma_y;
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericError("gmm_log_evidence: singular covariance");
    const Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(prior.means[k].data(),
                                                                 static_cast<Eigen::Index>(prior.dimension()));
    const Eigen::VectorXd r = yv - h * mu;
    const double quad = r.dot(llt.solve(r));
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double l = std::log(prior.weights[k]) - 0.5 * (m * std::log(2.0 * std::numbers::pi) + logdet + quad);
    logs.push_back(l);
    top = std::max(top, l);
  }
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - top);
  return top + std::log(acc);
}

GridPosterior::GridPosterior(const GmmPrior& prior, const LinearOperator& op, const Tensor& y, double sigma_y,
                             GridSpec spec)
    : dim_(prior.dimension()) {
  prior.validate();
  if (dim_ < 1 || dim_ > 2) throw InvalidArgument("grid_posterior: dimension must be 1 or 2");
  if (op.in_dim() != dim_ || op.out_dim() != y.size()) throw InvalidArgument("grid_posterior: operator mismatch");
  if (!(sigma_y > 0.0)) throw InvalidArgument("grid_posterior: sigma_y must be positive");
  if (spec.points < 3 || !(spec.upper > spec.lower)) throw InvalidArgument("grid_posterior: bad grid spec");

  spacing_ = (spec.upper - spec.lower) / static_cast<double>(spec.points - 1);
  axis_.resize(spec.points);
  for (std::size_t i = 0; i < spec.points; ++i) axis_[i] = spec.lower + spacing_ * static_cast<double>(i);

  const double log_evidence = gmm_log_evidence(prior, op, y, sigma_y);
  const double m = static_cast<double>(y.size());
  const double log_norm = -0.5 * m * std::log(2.0 * std::numbers::pi * sigma_y * sigma_y);
  const std::size_t n = spec.points;
  const std::size_t cells = dim_ == 1 ? n : n * n;
  density_.resize(cells);
  Tensor x({dim_});
  for (std::size_t c = 0; c < cells; ++c) {
    x[0] = axis_[dim_ == 1 ? c : c / n];
    if (dim_ == 2) x[1] = axis_[c % n];
    const Tensor r = y - op.apply(x);
    const double log_joint = prior.log_density(x.data(), 1.0) + log_norm - 0.5 * dot(r, r) / (sigma_y * sigma_y);
    density_[c] = std::exp(log_joint - log_evidence);
  }
  auto weight = [&](std::size_t i) { return (i == 0 || i + 1 == n) ? spacing_ / 2.0 : spacing_; };
  double total = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    total += density_[c] * (dim_ == 1 ? weight(c) : weight(c / n) * weight(c % n));
  }
  captured_mass_ = total;
  if (!(total > 0.99 && total < 1.01)) {
    throw InvalidArgument("grid_posterior: grid captures " + std::to_string(total) +
                          " of the posterior mass; widen bounds or refine resolution");
  }
  for (double& p : density_) p /= total;
}

std::vector<double> GridPosterior::marginal(std::size_t axis_index) const {
  if (axis_index >= dim_) throw InvalidArgument("grid posterior: axis out of range");
  const std::size_t n = axis_.size();
  if (dim_ == 1) return density_;
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double w = (j == 0 || j + 1 == n) ? spacing_ / 2.0 : spacing_;
      const std::size_t c = axis_index == 0 ? i * n + j : j * n + i;
      out[i] += w * density_[c];
    }
  }
  return out;
}

Tensor GridPosterior::mean() const {
  Tensor out({dim_});
  const std::size_t n = axis_.size();
  for (std::size_t a = 0; a < dim_; ++a) {
    const auto p = marginal(a);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += ((i == 0 || i + 1 == n) ? spacing_ / 2.0 : spacing_) * axis_[i] * p[i];
    }
    out[a] = acc;
  }
  return out;
}

Tensor GridPosterior::variance() const {
  const Tensor mu = mean();
  Tensor out({dim_});
  const std::size_t n = axis_.size();
  for (std::size_t a = 0; a < dim_; ++a) {
    const auto p = marginal(a);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = axis_[i] - mu[a];
      acc += ((i == 0 || i + 1 == n) ? spacing_ / 2.0 : spacing_) * dx * dx * p[i];
    }
    out[a] = acc;
  }
  return out;
}

std::vector<double> GridPosterior::marginal_cdf(std::size_t axis_index) const {
  const auto p = marginal(axis_index);
  std::vector<double> cdf(p.size(), 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * spacing_ * (p[i - 1] + p[i]);
  const double total = cdf.back();
  for (double& c : cdf) c /= total;
  return cdf;
}

double GridPosterior::mass_below(std::size_t axis_index, double threshold) const {
  const auto cdf = marginal_cdf(axis_index);
  if (threshold <= axis_.front()) return 0.0;
  if (threshold >= axis_.back()) return 1.0;
  const double pos = (threshold - axis_.front()) / spacing_;
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return cdf[i] + frac * (cdf[i + 1] - cdf[i]);
}

double GridPosterior::w1_distance(std::size_t axis_index, std::vector<double> samples) const {
  if (samples.empty()) throw InvalidArgument("w1_distance: no samples");
  const auto cdf = marginal_cdf(axis_index);
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double u = (static_cast<double>(i) + 0.5) / n;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    double q;
    if (k == 0) {
      q = axis_.front();
    } else if (k >= cdf.size()) {
      q = axis_.back();
    } else {
      const double span = cdf[k] - cdf[k - 1];
      const double frac = span > 0.0 ? (u - cdf[k - 1]) / span : 0.0;
      q = axis_[k - 1] + frac * spacing_;
    }
    acc += std::abs(samples[i] - q);
  }
  return acc / n;
}

GridPosterior grid_posterior(const GmmPrior& prior, const LinearOperator& op, const Tensor& y, double sigma_y,
                             GridSpec spec) {
  return GridPosterior(prior, op, y, sigma_y, spec);
}

Tensor finite_diff_jacobian_vjp(const VectorFunction& f, const Tensor& x, const Tensor& v, double step) {
  if (!(step > 0.0)) throw InvalidArgument("finite_diff_jacobian_vjp: step must be positive");
  Tensor out(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + step;
    const Tensor plus = f(probe);
    probe[i] = saved - step;
    const Tensor minus = f(probe);
    probe[i] = saved;
    if (!all_finite(plus.data()) || !all_finite(minus.data())) {
      throw NumericError("finite_diff_jacobian_vjp: non-finite function value at probe " + std::to_string(i));
    }
    out[i] = (dot(v, plus) - dot(v, minus)) / (2.0 * step);
  }
  return out;
}

namespace {

Tensor stationarity_from_score(const NoiseSchedule& schedule, const Tensor& x_t, int t, const Tensor& x_hat,
                               const Tensor& data_score) {
  require_same_size(x_t, x_hat, "map_stationarity_residual");
  const double root_abar = std::sqrt(schedule.alpha_bar(t));
  const double zeta = schedule.zeta(t);
  Tensor out(x_hat.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = -root_abar * (root_abar * x_hat[i] - x_t[i]) / zeta + data_score[i];
  }
  require_finite(out, "map_stationarity_residual");
  return out;
}

}  // namespace

Tensor map_stationarity_residual(const GmmPrior& prior, const NoiseSchedule& schedule, const Tensor& x_t, int t,
                                 const Tensor& x_hat) {
  const GmmScore model(prior);
  return stationarity_from_score(schedule, x_t, t, x_hat, model.data_score(x_hat));
}

Tensor map_stationarity_residual(const ScoreModel& model, const NoiseSchedule& schedule, const Tensor& x_t, int t,
                                 const Tensor& x_hat) {
  Tensor proxy = model.eval(x_hat, 1, schedule);
  proxy *= -1.0 / std::sqrt(schedule.zeta(1));
  return stationarity_from_score(schedule, x_t, t, x_hat, proxy);
}

Q2Fit tune_q2_for_stationarity(const GmmScore& model, const NoiseSchedule& schedule, const Tensor& x_t, int t,
                               double q2_max) {
  const Tensor score = model.eval(x_t, t, schedule);
  auto objective = [&](double q2) {
    const X0Estimate est = combine_estimate(x_t, score, t, map_coefficients(schedule, t, 0.0, q2));
    const Tensor r = map_stationarity_residual(model.prior(), schedule, x_t, t, est.x_hat);
    return dot(r, r);
  };
  const auto [q2, value] = boost::math::tools::brent_find_minima(objective, 0.0, q2_max, 50);
  return {q2, std::sqrt(value)};
}

}  // namespace gdiff
