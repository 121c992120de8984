#pragma once

#include <stdexcept>
#include <string>

namespace okb {

/// Invalid configuration or input document (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched vector/matrix dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Explicit history enumeration exceeded its configured node cap.
class HistoryBlowup : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A learning update received a non-finite target.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver hit its iteration cap before reaching tolerance.
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace okb
