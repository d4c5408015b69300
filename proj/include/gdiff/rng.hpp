// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

#include "gdiff/tensor.hpp"

namespace gdiff {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer, used to mix stream ids.
std::uint64_t mix64(std::uint64_t z);

/// Deterministic natural logarithm built from IEEE-754 basic operations
/// only, so that results do not depend on the platform's libm.
double portable_log(double x);

/**
 * Counter-based generator: the 128-bit Philox counter is split into a
 * 64-bit block counter (low words) and a 64-bit stream id (high words),
 * and the 64-bit seed is the Philox key. Output i of a given (seed,
 * stream) is a pure function of i.
 *
 * Gaussian variates use the Marsaglia polar method on uniforms in
 * (-1, 1) with 53-bit resolution; both values of each accepted pair are
 * used, in order.
 */
class SeededGenerator {
 public:
  explicit SeededGenerator(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  /// Number of Philox blocks consumed so far.
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  double gaussian();
  Tensor gaussian(const Shape& shape);

  /// Child generator on a stream derived from (this stream, stream_id).
  /// The parent's state is not touched.
  SeededGenerator split(std::uint64_t stream_id) const;

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int block_pos_ = 2;
  double spare_gaussian_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gdiff
