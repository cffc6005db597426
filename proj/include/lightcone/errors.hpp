#pragma once
#include <stdexcept>
#include <string>

namespace lightcone {

// Caller handed us something outside a documented precondition.
struct invalid_input_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Request would exceed a hard cap (Hilbert-space dimension, series order, ...).
struct resource_limit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative scheme failed to converge; message carries diagnostics.
struct numerical_failure_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parameters are outside the regime where a formula is defined (alpha <= 2D, ...).
struct unsupported_regime_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Too few points survived filtering for a fit to make sense.
struct insufficient_data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lightcone
