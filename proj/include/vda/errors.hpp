#pragma once

#include <stdexcept>
#include <string>

#include "vda/types.hpp"

namespace vda {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutOfBoundsError : public Error {
 public:
  using Error::Error;
};

class TimeOutOfRangeError : public Error {
 public:
  using Error::Error;
};

class MissingSnapshotError : public Error {
 public:
  using Error::Error;
};

class NotAnObservationTimeError : public Error {
 public:
  using Error::Error;
};

class EmptyObservationsError : public Error {
 public:
  using Error::Error;
};

/// Forward integration produced NaN/Inf; carries the failing step index.
class NonFiniteStateError : public Error {
 public:
  NonFiniteStateError(const std::string& what, Index step)
      : Error(what), step_(step) {}
  Index step() const { return step_; }

 private:
  Index step_ = -1;
};

class NonFiniteAdjointError : public Error {
 public:
  using Error::Error;
};

class NonFiniteCostError : public Error {
 public:
  using Error::Error;
};

class LineSearchFailureError : public Error {
 public:
  using Error::Error;
};

class BreakdownError : public Error {
 public:
  using Error::Error;
};

class MissingLambdaError : public Error {
 public:
  using Error::Error;
};

class NoBracketingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace vda
