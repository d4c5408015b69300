// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "gdiff/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gdiff/error.hpp"

namespace gdiff {

struct LinearOperator::Data {
  OperatorKind kind = OperatorKind::identity;
  Shape in_shape;
  Shape out_shape;
  std::vector<std::size_t> kept;
  std::size_t factor = 1;
  DownsampleKernel kernel = DownsampleKernel::block_average;
  // CSR rows for downsample operators.
  std::vector<std::size_t> row_start;
  std::vector<std::size_t> cols;
  std::vector<double> vals;
};

std::size_t LinearOperator::in_dim() const { return shape_size(data_->in_shape); }
std::size_t LinearOperator::out_dim() const { return shape_size(data_->out_shape); }
const Shape& LinearOperator::in_shape() const { return data_->in_shape; }
const Shape& LinearOperator::out_shape() const { return data_->out_shape; }
OperatorKind LinearOperator::kind() const { return data_->kind; }
const std::vector<std::size_t>& LinearOperator::kept_indices() const { return data_->kept; }
std::size_t LinearOperator::factor() const { return data_->factor; }
DownsampleKernel LinearOperator::kernel() const { return data_->kernel; }

Tensor LinearOperator::apply(const Tensor& x) const {
  if (x.size() != in_dim()) {
    throw InvalidArgument("operator apply: expected " + std::to_string(in_dim()) + " entries, got " +
                          std::to_string(x.size()));
  }
  const Data& d = *data_;
  switch (d.kind) {
    case OperatorKind::identity:
      return Tensor(d.out_shape, x.values());
    case OperatorKind::mask: {
      Tensor out(d.out_shape);
      for (std::size_t i = 0; i < d.kept.size(); ++i) out[i] = x[d.kept[i]];
      return out;
    }
    case OperatorKind::downsample:
    case OperatorKind::matrix: {
      Tensor out(d.out_shape);
      for (std::size_t r = 0; r + 1 < d.row_start.size(); ++r) {
        double acc = 0.0;
        for (std::size_t k = d.row_start[r]; k < d.row_start[r + 1]; ++k) acc += d.vals[k] * x[d.cols[k]];
        out[r] = acc;
      }
      return out;
    }
  }
  throw Error("unreachable operator kind");
}

Tensor LinearOperator::adjoint(const Tensor& y) const {
  if (y.size() != out_dim()) {
    throw InvalidArgument("operator adjoint: expected " + std::to_string(out_dim()) + " entries, got " +
                          std::to_string(y.size()));
  }
  const Data& d = *data_;
  switch (d.kind) {
    case OperatorKind::identity:
      return Tensor(d.in_shape, y.values());
    case OperatorKind::mask: {
      Tensor out(d.in_shape);
      for (std::size_t i = 0; i < d.kept.size(); ++i) out[d.kept[i]] = y[i];
      return out;
    }
    case OperatorKind::downsample:
    case OperatorKind::matrix: {
      Tensor out(d.in_shape);
      for (std::size_t r = 0; r + 1 < d.row_start.size(); ++r) {
        for (std::size_t k = d.row_start[r]; k < d.row_start[r + 1]; ++k) out[d.cols[k]] += d.vals[k] * y[r];
      }
      return out;
    }
  }
  throw Error("unreachable operator kind");
}

LinearOperator make_identity(const Shape& shape) {
  if (shape_size(shape) == 0) throw InvalidArgument("identity operator needs a positive size");
  auto d = std::make_shared<LinearOperator::Data>();
  d->kind = OperatorKind::identity;
  d->in_shape = shape;
  d->out_shape = shape;
  return LinearOperator(std::move(d));
}

LinearOperator make_identity(std::size_t n) { return make_identity(Shape{n}); }

LinearOperator make_mask(const Shape& shape, std::vector<std::size_t> kept) {
  const std::size_t n = shape_size(shape);
  if (n == 0) throw InvalidArgument("mask operator needs a positive size");
  if (kept.empty()) throw InvalidArgument("mask operator keeps no entries (empty measurement)");
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (kept[i] >= n) throw InvalidArgument("mask index " + std::to_string(kept[i]) + " out of range");
    if (i > 0 && kept[i] <= kept[i - 1]) throw InvalidArgument("mask indices must be strictly increasing");
  }
  auto d = std::make_shared<LinearOperator::Data>();
  d->kind = OperatorKind::mask;
  d->in_shape = shape;
  d->out_shape = {kept.size()};
  d->kept = std::move(kept);
  return LinearOperator(std::move(d));
}

LinearOperator make_mask(std::size_t n, std::vector<std::size_t> kept) { return make_mask(Shape{n}, std::move(kept)); }

namespace {

LinearOperator mask_from_occlusion(const ImageMeta& meta, const std::vector<bool>& occluded) {
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < meta.channels; ++c) {
    for (std::size_t p = 0; p < meta.pixels(); ++p) {
      if (!occluded[p]) kept.push_back(c * meta.pixels() + p);
    }
  }
  if (kept.size() == meta.size()) return make_identity(meta.shape());
  if (kept.empty()) throw InvalidArgument("mask occludes every pixel (empty measurement)");
  return make_mask(meta.shape(), std::move(kept));
}

}  // namespace

LinearOperator make_box_mask(const ImageMeta& meta, std::size_t top, std::size_t left, std::size_t height,
                             std::size_t width) {
  meta.validate();
  if (top + height > meta.height || left + width > meta.width) {
    throw InvalidArgument("box mask exceeds image bounds");
  }
  std::vector<bool> occluded(meta.pixels(), false);
  for (std::size_t y = top; y < top + height; ++y) {
    for (std::size_t x = left; x < left + width; ++x) occluded[y * meta.width + x] = true;
  }
  return mask_from_occlusion(meta, occluded);
}

LinearOperator make_pattern_mask(const ImageMeta& meta, const Tensor& pattern) {
  meta.validate();
  const Shape& s = pattern.shape();
  const bool ok = (s.size() == 2 && s[0] == meta.height && s[1] == meta.width) ||
                  (s.size() == 3 && s[0] == 1 && s[1] == meta.height && s[2] == meta.width);
  if (!ok) {
    throw InvalidArgument("pattern shape " + shape_string(s) + " does not match image " +
                          std::to_string(meta.height) + "x" + std::to_string(meta.width));
  }
  std::vector<bool> occluded(meta.pixels());
  for (std::size_t p = 0; p < meta.pixels(); ++p) {
    if (pattern[p] != 0.0 && pattern[p] != 1.0) throw InvalidArgument("pattern entries must be 0 or 1");
    occluded[p] = pattern[p] == 1.0;
  }
  return mask_from_occlusion(meta, occluded);
}

Tensor load_pattern(const std::filesystem::path& path) {
  auto [image, meta] = read_image(path);
  if (meta.channels != 1) throw FormatError("pattern '" + path.string() + "' must be a grayscale P5 image");
  Tensor pattern({meta.height, meta.width});
  // Pixels were read as byte / 255; byte >= 128 <=> value * 255 >= 127.5.
  for (std::size_t p = 0; p < meta.pixels(); ++p) pattern[p] = image[p] * 255.0 >= 127.5 ? 1.0 : 0.0;
  return pattern;
}

namespace {

double catmull_rom(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

// Dense 1D resampling weights, out_len x in_len, rows summing to one.
std::vector<std::vector<double>> axis_weights(std::size_t in_len, std::size_t factor, DownsampleKernel kernel) {
  const std::size_t out_len = in_len / factor;
  std::vector<std::vector<double>> w(out_len, std::vector<double>(in_len, 0.0));
  const double f = static_cast<double>(factor);
  for (std::size_t o = 0; o < out_len; ++o) {
    if (kernel == DownsampleKernel::block_average) {
      for (std::size_t i = o * factor; i < (o + 1) * factor; ++i) w[o][i] = 1.0 / f;
      continue;
    }
    const double center = (static_cast<double>(o) + 0.5) * f - 0.5;
    const auto lo = static_cast<long>(std::floor(center - 2.0 * f));
    const auto hi = static_cast<long>(std::ceil(center + 2.0 * f));
    double total = 0.0;
    for (long i = lo; i <= hi; ++i) {
      const double k = catmull_rom((static_cast<double>(i) - center) / f);
      if (k == 0.0) continue;
      const long clamped = std::clamp(i, 0L, static_cast<long>(in_len) - 1);
      w[o][static_cast<std::size_t>(clamped)] += k;
      total += k;
    }
    for (double& v : w[o]) v /= total;
  }
  return w;
}

}  // namespace

LinearOperator make_downsample(const ImageMeta& meta, std::size_t factor, DownsampleKernel kernel) {
  meta.validate();
  if (factor == 0) throw InvalidArgument("downsample factor must be positive");
  // A single-row or single-column image is a 1D signal; that axis is kept.
  const std::size_t fh = meta.height == 1 ? 1 : factor;
  const std::size_t fw = meta.width == 1 ? 1 : factor;
  if (meta.height % fh != 0 || meta.width % fw != 0) {
    throw InvalidArgument("downsample factor " + std::to_string(factor) + " does not divide " +
                          std::to_string(meta.height) + "x" + std::to_string(meta.width));
  }
  const auto wh = axis_weights(meta.height, fh, kernel);
  const auto ww = axis_weights(meta.width, fw, kernel);
  const std::size_t oh = meta.height / fh;
  const std::size_t ow = meta.width / fw;

  auto d = std::make_shared<LinearOperator::Data>();
  d->kind = OperatorKind::downsample;
  d->in_shape = meta.shape();
  d->out_shape = {meta.channels, oh, ow};
  d->factor = factor;
  d->kernel = kernel;
  d->row_start.push_back(0);
  for (std::size_t c = 0; c < meta.channels; ++c) {
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t s = 0; s < ow; ++s) {
        for (std::size_t y = 0; y < meta.height; ++y) {
          if (wh[r][y] == 0.0) continue;
          for (std::size_t x = 0; x < meta.width; ++x) {
            if (ww[s][x] == 0.0) continue;
            d->cols.push_back((c * meta.height + y) * meta.width + x);
            d->vals.push_back(wh[r][y] * ww[s][x]);
          }
        }
        d->row_start.push_back(d->cols.size());
      }
    }
  }
  return LinearOperator(std::move(d));
}

LinearOperator make_matrix(std::size_t rows, std::size_t cols, const std::vector<double>& values) {
  if (rows == 0 || cols == 0) throw InvalidArgument("matrix operator needs positive dimensions");
  if (values.size() != rows * cols) throw InvalidArgument("matrix operator: value count does not match shape");
  if (!all_finite(values)) throw InvalidArgument("matrix operator: non-finite entry");
  auto d = std::make_shared<LinearOperator::Data>();
  d->kind = OperatorKind::matrix;
  d->in_shape = {cols};
  d->out_shape = {rows};
  d->row_start.push_back(0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (values[r * cols + c] == 0.0) continue;
      d->cols.push_back(c);
      d->vals.push_back(values[r * cols + c]);
    }
    d->row_start.push_back(d->cols.size());
  }
  return LinearOperator(std::move(d));
}

Measurement corrupt(const LinearOperator& op, const Tensor& x0, double sigma_y, SeededGenerator& rng) {
  if (!(sigma_y > 0.0) || !std::isfinite(sigma_y)) throw InvalidArgument("corrupt: sigma_y must be positive");
  require_finite(x0, "corrupt input");
  Tensor y = op.apply(x0);
  const Tensor z = rng.gaussian(y.shape());
  y.add_scaled(z, sigma_y);
  return Measurement{std::move(y), sigma_y, op};
}

}  // namespace gdiff
