#pragma once

#include <stdexcept>

namespace seqsim {

// Input document does not conform to the expected schema.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally valid input that violates a domain invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Curve that no integer event/censoring allocation can realize.
struct ReconstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad argument to a numeric routine.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Missing or inconsistent run configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace seqsim
