#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qpot {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// σ(x) is (numerically) singular at a queried point.
class SingularDiffusionError : public Error {
 public:
  using Error::Error;
};

/// A model was queried outside the region where it is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A quadratic form expected to be nonnegative came out negative.
class NonPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

/// An internal identity that must hold by construction was violated.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class NotASaddleError : public Error {
 public:
  using Error::Error;
};

class DegenerateHessianError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration (unknown model, invalid parameter, unsupported request).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A run failed; names the stage ("solve", "map", "rate", "write", ...) that failed.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace qpot
