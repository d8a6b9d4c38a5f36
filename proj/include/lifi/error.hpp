#pragma once

#include <stdexcept>
#include <string>

namespace lifi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate or out-of-range geometry (coincident devices, pose outside the room).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration value or unknown configuration key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset or model file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: rank-deficient channel, divergent training, solver breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Optimization instance with an empty feasible set.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace lifi
