#pragma once

#include <stdexcept>
#include <string>

namespace hrf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidFieldError : public Error {
 public:
  using Error::Error;
};

class GridMismatchError : public Error {
 public:
  using Error::Error;
};

class DegenerateMetricError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function (negative time, tau <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A hypothesis required by an operation does not hold for the given data.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hrf
