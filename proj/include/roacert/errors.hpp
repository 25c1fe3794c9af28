#pragma once

#include <stdexcept>
#include <string>

namespace roacert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix or vector shapes that do not chain.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An interval with lo > hi, or a bound pair with lower > upper.
class InvalidIntervalError : public Error {
 public:
  using Error::Error;
};

/// Invalid numeric parameter (negative multiplier, unstable pole, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// IQC channels that overlap inconsistently or leave a plant port uncovered.
class InterconnectionError : public Error {
 public:
  using Error::Error;
};

/// Robust analysis requested around a nonzero equilibrium.
class UnsupportedEquilibriumError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or weight file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace roacert
