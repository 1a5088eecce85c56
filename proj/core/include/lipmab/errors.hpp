#pragma once

#include <stdexcept>
#include <string>

namespace lipmab {

// Bad user-facing configuration (budgets, ranges, unknown keys).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Protocol state machine used out of order (e.g. update after the phase ended).
class PhaseError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Should-not-happen conditions: failed convergence, exceeded safety caps.
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lipmab
