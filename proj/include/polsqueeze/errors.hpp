#pragma once

#include <stdexcept>
#include <string>

namespace polsqueeze {

/// Invalid physical or numerical parameter (violated precondition).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Time window too short to hold a pulse or a response kernel.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A single trajectory diverged (NaN/Inf, aliasing guard).
class TrajectoryAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The shot-noise reference failed its isotropy check.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace polsqueeze
