#pragma once

#include <stdexcept>
#include <string>

namespace mfu {

// Invalid density or model parameters (e.g. Uniform with lo >= hi).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad call arguments (sizes, counts, probability levels).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Value outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Zero-spread inputs: constant samples, constant outputs.
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failure during a computation (instability, underflow, bad start).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A combination of options the estimators cannot interpret.
struct UnsupportedConfiguration : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Experiment configuration problems; `field` names the offending entry.
struct ConfigError : std::runtime_error {
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field(std::move(field)) {}
  std::string field;
};

}  // namespace mfu
