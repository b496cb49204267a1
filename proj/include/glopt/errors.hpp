#pragma once

#include <stdexcept>
#include <string>

namespace glopt {

// Non-finite input, asymmetric matrix, eigen-iteration failure.
struct NumericError : std::domain_error {
  using std::domain_error::domain_error;
};

// A theorem's parameter regime is violated. The message names the inequality.
struct RegimeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A run diverged or hit an impossible state (e.g. Polyak step with zero subgradient).
struct RunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed configuration, problem id or CLI value.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace glopt
