// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gdiff {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/**
 * Dense row-major array of doubles with an explicit shape.
 *
 * A default-constructed tensor is empty (rank 0, no data) and only
 * serves as a placeholder; every other constructor requires rank >= 1
 * and positive extents.
 */
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  /// Rank-1 tensor holding `values`.
  static Tensor vector(std::vector<double> values);
  static Tensor vector(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Same data under a new shape of equal size.
  Tensor reshaped(Shape shape) const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double scale);
  /// this += scale * other
  Tensor& add_scaled(const Tensor& other, double scale);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(double scale, Tensor a);

double dot(const Tensor& a, const Tensor& b);
double norm(const Tensor& a);
/// Largest absolute entry.
double max_abs(const Tensor& a);

bool all_finite(std::span<const double> values);
/// Throws NumericError naming `what` when any entry is NaN or infinite.
void require_finite(const Tensor& t, std::string_view what);
/// Throws InvalidArgument when the shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, std::string_view what);
/// Throws InvalidArgument when the element counts differ.
void require_same_size(const Tensor& a, const Tensor& b, std::string_view what);

}  // namespace gdiff
