#pragma once

#include <stdexcept>
#include <string>

namespace oocs {

/// Base of every error thrown by the library. The CLI maps the three
/// families below onto exit codes 2 (configuration), 3 (I/O), 4 (numeric).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Configuration family.
class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class InvalidKernelError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// I/O family.
class UnsupportedFormatError : public IoError {
 public:
  using IoError::IoError;
};

class CorruptFileError : public IoError {
 public:
  using IoError::IoError;
};

// Numeric family.
class DegenerateKernelError : public NumericError {
 public:
  using NumericError::NumericError;
};

class NormalizationError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ResampleError : public NumericError {
 public:
  using NumericError::NumericError;
};

class UndefinedDistanceError : public NumericError {
 public:
  using NumericError::NumericError;
};

class RangeError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace oocs
