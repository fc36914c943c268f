#pragma once

#include <stdexcept>
#include <string>

namespace hyba {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or dimension disagreement between two operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file or run artifact that is required but absent or unreadable.
class ArtifactError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (IDX headers, CSV rows, model JSON).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace hyba
