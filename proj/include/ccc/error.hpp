#pragma once

#include <stdexcept>
#include <string>

namespace ccc {

// Process exit codes used by the CLI and documented in the README.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,       // unclassified failure
  kExitConfig = 2,        // config or schema error
  kExitMissingInput = 3,  // missing input file or directory
  kExitNumeric = 4,       // NaN/Inf or failed numeric check
};

/// Bad configuration value, malformed schema, or violated precondition
/// attributable to user-supplied input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required input file or directory does not exist.
class MissingInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value detected, or a numeric verification failed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ccc
