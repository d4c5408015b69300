// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <utility>

#include "gdiff/tensor.hpp"

namespace gdiff {

/// Image geometry. Tensors tagged with an ImageMeta have shape
/// [channels, height, width] and values in [0, 1].
struct ImageMeta {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;

  Shape shape() const { return {channels, height, width}; }
  std::size_t pixels() const { return height * width; }
  std::size_t size() const { return channels * height * width; }

  /// Throws InvalidArgument unless channels is 1 or 3 and extents are positive.
  void validate() const;
  /// Derives the meta from a rank-3 [C,H,W] tensor (rank 1 is treated as [1,1,n]).
  static ImageMeta from_shape(const Shape& shape);

  friend bool operator==(const ImageMeta&, const ImageMeta&) = default;
};

/// Reads a binary P5 (gray) or P6 (RGB) portable any-map with maxval 255.
std::pair<Tensor, ImageMeta> read_image(const std::filesystem::path& path);

/// Writes a P5/P6 file; values are clamped to [0,1] and quantized as
/// floor(v * 255 + 0.5).
void write_image(const Tensor& tensor, const ImageMeta& meta, const std::filesystem::path& path);

// "GDT1" container: magic, u32 rank, u32 extents, f64 data, all little-endian.
void write_tensor(std::ostream& out, const Tensor& tensor);
Tensor read_tensor(std::istream& in);
void write_tensor(const Tensor& tensor, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

/// Loads an image (.pgm/.ppm/.pnm) or a GDT1 tensor, chosen by extension.
Tensor load_tensor_or_image(const std::filesystem::path& path);

}  // namespace gdiff
