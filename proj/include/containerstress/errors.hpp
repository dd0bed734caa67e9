#pragma once

#include <stdexcept>
#include <string>

namespace cstress {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// signals
class MomentInfeasible : public Error {
 public:
  using Error::Error;
};
class BadCorrelation : public Error {
 public:
  using Error::Error;
};
class TooFewSamples : public Error {
 public:
  using Error::Error;
};

// mset
class ConstraintViolated : public Error {
 public:
  using Error::Error;
};
class InsufficientTraining : public Error {
 public:
  using Error::Error;
};
class DegenerateModel : public Error {
 public:
  using Error::Error;
};
class EigFailure : public Error {
 public:
  using Error::Error;
};

// backends / shapes
class ShapeError : public Error {
 public:
  using Error::Error;
};

// sweep / surfaces
class EmptyGrid : public Error {
 public:
  using Error::Error;
};
class UnknownBackend : public Error {
 public:
  using Error::Error;
};
class BadSlice : public Error {
 public:
  using Error::Error;
};

// configuration / I/O
class ConfigError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cstress
