#pragma once

#include <stdexcept>
#include <string>

namespace vfp {

/// Rejected input: a precondition or configuration constraint failed.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to deliver its postcondition
/// (non-convergence, positivity loss, blow-up).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vfp
