#pragma once

#include <stdexcept>
#include <string>

namespace mmq {

// Invalid model data: malformed generator, bad rates, bad costs.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Generator passes the entrywise checks but has more than one communicating class.
class ReducibleGenerator : public ModelError {
 public:
  using ModelError::ModelError;
};

// A rate family was asked for an index n it does not define.
class UndefinedIndex : public ModelError {
 public:
  using ModelError::ModelError;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical post-condition (residual, centering, symmetry) did not hold.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmq
