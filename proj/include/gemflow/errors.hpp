#pragma once

#include <stdexcept>
#include <string>

namespace gemflow {

/// Bad user configuration: widths, unknown ids, unknown keys, out-of-range hyper-parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-conformable matrix or batch shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Empty batches and similar argument violations that are not shape mismatches.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of a scalar function (e.g. f''(u) with u <= 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A non-finite value appeared in a loss, gradient, or velocity.
class NumericFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or parse failure on an external file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gemflow
