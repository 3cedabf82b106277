#pragma once

#include <stdexcept>
#include <string>

namespace setrec {

/// Invalid or unrepresentable parameter combination (field setup, schedules).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input outside the domain of an operation (element out of universe, duplicate
/// element, degenerate probability, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operation invoked in a way its contract forbids (mismatched sketches, empty trace).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Non-invertible field element where an inverse was required.
class ArithmeticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or mismatched message between the two parties.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace setrec
