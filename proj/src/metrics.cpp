// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "gdiff/error.hpp"

namespace gdiff {

double mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr(const Tensor& a, const Tensor& b, double peak) {
  if (!(peak > 0.0)) throw InvalidArgument("psnr: peak must be positive");
  const double err = mse(a, b);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / err);
}

std::string format_metric(double value, int precision) {
  if (std::isinf(value) && value > 0.0) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, value);
  return buf;
}

Tensor sample_mean(std::span<const Tensor> samples) {
  if (samples.empty()) throw InvalidArgument("sample_mean: no samples");
  Tensor mean(samples.front().shape());
  for (const Tensor& s : samples) {
    require_same_shape(mean, s, "sample_mean");
    mean += s;
  }
  mean *= 1.0 / static_cast<double>(samples.size());
  return mean;
}

SampleMoments sample_moments(std::span<const Tensor> samples) {
  if (samples.size() < 2) throw InvalidArgument("sample_moments: variance needs at least two samples");
  Tensor mean = sample_mean(samples);
  Tensor var(mean.shape());
  for (const Tensor& s : samples) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double d = s[i] - mean[i];
      var[i] += d * d;
    }
  }
  var *= 1.0 / static_cast<double>(samples.size() - 1);
  return {std::move(mean), std::move(var)};
}

}  // namespace gdiff
