// Copyright 2026 The gdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gdiff {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition: bad shape, out-of-range parameter, empty input.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A computation produced (or was fed) a NaN or infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A sampling chain or training run left the finite range.
class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gdiff
