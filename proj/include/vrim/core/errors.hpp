#ifndef VRIM_CORE_ERRORS_HPP
#define VRIM_CORE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vrim {

// Bad user input: unknown flags, inconsistent experiment settings.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or malformed data files.
struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Anything that went wrong inside the numerics.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : NumericalError {
  using NumericalError::NumericalError;
};

struct DimensionMismatch : NumericalError {
  using NumericalError::NumericalError;
};

struct QuadratureError : NumericalError {
  using NumericalError::NumericalError;
};

struct NonFiniteGradient : NumericalError {
  using NumericalError::NumericalError;
};

struct GradientUnavailable : NumericalError {
  using NumericalError::NumericalError;
};

struct InitializationTimeout : NumericalError {
  using NumericalError::NumericalError;
};

// Variance-minimising coefficient has a vanishing denominator; callers
// fall back to a coefficient of 1.
struct DegenerateDenominator : NumericalError {
  using NumericalError::NumericalError;
};

// (proposal, function) pair with no closed-form expectation.
struct UnsupportedPair : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace vrim

#endif
