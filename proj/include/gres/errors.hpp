// Copyright 2026 The gres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace gres {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatch, invalid parameters, bad run files.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown during propagation or assembly.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A symmetrized sector has (numerically) zero norm, e.g. two fermions
/// sitting on the same center.
class SectorCollapse : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace gres
