// Copyright 2026 the cagat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace cagat {

// Operand shapes or modes do not conform.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input violates a mathematical precondition (log of non-positive value,
// label out of range, empty softmax segment, ...).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf produced, or a linear system is singular.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent dataset files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration values.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cagat
