#pragma once

#include <stdexcept>
#include <string>

namespace conic_ricci {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violates a documented precondition (range, ordering, schema).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The discretization cannot represent the requested object.
class GridError : public Error {
 public:
  using Error::Error;
};

/// A time step changed the potential by more than the configured safeguard.
class CflError : public Error {
 public:
  using Error::Error;
};

/// The curvature left the configured envelope during a flow run.
class BlowUpError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure (shooting, minimization) could not make progress.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace conic_ricci
