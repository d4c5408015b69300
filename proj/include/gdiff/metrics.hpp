// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>

#include "gdiff/tensor.hpp"

namespace gdiff {

double mse(const Tensor& a, const Tensor& b);

/// 10 log10(peak^2 / mse); +infinity when the inputs are identical.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

/// Fixed-point text for a metric value, "inf" for +infinity.
std::string format_metric(double value, int precision = 6);

struct SampleMoments {
  Tensor mean;
  /// Unbiased (n - 1) per-coordinate variance.
  Tensor variance;
};

Tensor sample_mean(std::span<const Tensor> samples);
/// Throws for fewer than two samples.
SampleMoments sample_moments(std::span<const Tensor> samples);

}  // namespace gdiff
