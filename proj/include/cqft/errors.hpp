#pragma once

#include <stdexcept>
#include <string>

namespace cqft {

/// Bad user input: malformed config, out-of-range parameter, unknown key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physical or numerical invariant did not hold (unitarity, PSD, ...).
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative procedure did not converge or a bracket could not be found.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cqft
