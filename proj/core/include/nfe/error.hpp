#pragma once

#include <stdexcept>
#include <string>

namespace nfe {

/// Raised when a caller passes parameters outside an operation's domain.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by the time stepper: fixed-point divergence, non-finite state,
/// missing history.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nfe
