#pragma once

#include <stdexcept>

namespace meiscv {

// Broken preconditions: bad arguments, malformed configs, dimension mismatches.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failures detected while computing: support violations, singular fits,
// likelihood-ratio overflow, degenerate controls.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The control-to-sampling ratio is constant over the sample, so the
// regression for the control parameter is undefined.
class DegenerateControlError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace meiscv
