#pragma once

#include <stdexcept>
#include <string>

namespace fluctlab {

/// Operator support is not contained in the requested window.
struct SupportError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A window grew past the configured dimension guard.
struct WindowCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A state spec violates its normalization/fixed-point invariants.
struct InvariantViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Correlation sums require a mixing certificate that is not available.
struct NoMixingCertificateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The symplectic form does not descend to the quotient within tolerance.
struct QuotientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fluctlab
