#pragma once

#include <stdexcept>
#include <string>

namespace gibbs_ot {

// Precondition violations on library calls surface as std::invalid_argument.
// The types below carry a category that the CLI maps onto exit codes.

/// Bad command-line or configuration value.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A solver gave up (iteration cap, breakdown).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gibbs_ot
