// Copyright 2026 The sdvsum Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sdvsum {

// Shape disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent on-disk data (containers, manifests, checkpoints).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary container failures. The kind lets callers and tests tell them apart.
class FormatError : public DataError {
 public:
  enum class Kind {
    BadMagic,
    BadVersion,
    Truncated,
    TrailingBytes,
    DimensionOverflow,
    NonFinite,
    NameMismatch,
    ShapeMismatch,
    ConfigMismatch,
    Io,
  };

  FormatError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Non-finite loss or gradient during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid run configuration (unknown key, malformed value, inconsistent settings).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace sdvsum
