// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "gdiff/rng.hpp"
#include "gdiff/tensor.hpp"
#include "gdiff/tensor_io.hpp"

namespace gdiff {

enum class OperatorKind { identity, mask, downsample, matrix };
enum class DownsampleKernel { block_average, bicubic };

/**
 * Linear measurement operator H with an exact adjoint.
 *
 * Masks are stored as kept indices; downsampling is stored as an explicit
 * sparse row matrix so that adjoint() is its transpose by construction.
 * Copies share the immutable operator data.
 */
class LinearOperator {
 public:
  std::size_t in_dim() const;
  std::size_t out_dim() const;
  const Shape& in_shape() const;
  const Shape& out_shape() const;
  OperatorKind kind() const;
  /// Kept flat indices (mask operators only).
  const std::vector<std::size_t>& kept_indices() const;
  std::size_t factor() const;
  DownsampleKernel kernel() const;

  /// Accepts any tensor with in_dim() entries; returns out_shape().
  Tensor apply(const Tensor& x) const;
  /// Accepts any tensor with out_dim() entries; returns in_shape().
  Tensor adjoint(const Tensor& y) const;

 private:
  struct Data;
  explicit LinearOperator(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

  friend LinearOperator make_identity(std::size_t n);
  friend LinearOperator make_identity(const Shape& shape);
  friend LinearOperator make_mask(const Shape& shape, std::vector<std::size_t> kept);
  friend LinearOperator make_downsample(const ImageMeta& meta, std::size_t factor, DownsampleKernel kernel);
  friend LinearOperator make_matrix(std::size_t rows, std::size_t cols, const std::vector<double>& values);

  std::shared_ptr<const Data> data_;
};

LinearOperator make_identity(std::size_t n);
LinearOperator make_identity(const Shape& shape);

/// Keeps the listed entries (strictly increasing, inside [0, n)).
LinearOperator make_mask(std::size_t n, std::vector<std::size_t> kept);
LinearOperator make_mask(const Shape& shape, std::vector<std::size_t> kept);

/// Occludes the box in every channel. A zero-area box yields the identity.
LinearOperator make_box_mask(const ImageMeta& meta, std::size_t top, std::size_t left, std::size_t height,
                             std::size_t width);

/// `pattern` is [H,W] (or [1,H,W]) with 1 = occluded, 0 = kept, applied to all channels.
LinearOperator make_pattern_mask(const ImageMeta& meta, const Tensor& pattern);

/// Reads a P5 image as an occlusion pattern: bytes >= 128 are occluded.
Tensor load_pattern(const std::filesystem::path& path);

/**
 * Downsampling by an integer factor. block_average takes factor x factor
 * block means. bicubic applies the separable Catmull-Rom kernel (a = -0.5)
 * stretched by the factor for antialiasing, with clamped borders and rows
 * normalized to sum to one. An axis of extent 1 is left unchanged, so a
 * 1 x n image downsamples as a 1D signal.
 */
LinearOperator make_downsample(const ImageMeta& meta, std::size_t factor, DownsampleKernel kernel);

/// General dense H (row-major rows x cols), stored sparsely.
LinearOperator make_matrix(std::size_t rows, std::size_t cols, const std::vector<double>& values);

/// Measurement y = H x0 + sigma_y z.
struct Measurement {
  Tensor y;
  double sigma_y = 0.0;
  LinearOperator op;
};

/// Draws y = apply(x0) + sigma_y * z with z ~ N(0, I) from `rng`.
Measurement corrupt(const LinearOperator& op, const Tensor& x0, double sigma_y, SeededGenerator& rng);

}  // namespace gdiff
