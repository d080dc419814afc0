#pragma once

#include <stdexcept>
#include <string>

namespace svdnn {

/// Raised when an argument violates an operation's precondition
/// (shape mismatch, non-finite entries, out-of-range parameter).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative procedure cannot produce a trustworthy result:
/// SVD sweeps exhausted, NaN/Inf in an optimizer, and so on.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double residual = 0.0,
                   long iteration = -1)
      : std::runtime_error(what), residual_(residual), iteration_(iteration) {}

  double residual() const noexcept { return residual_; }
  long iteration() const noexcept { return iteration_; }

 private:
  double residual_;
  long iteration_;
};

}  // namespace svdnn
