#pragma once

#include <stdexcept>
#include <string>

namespace kglab {

/// Argument outside the mathematical domain of a function (negative or
/// non-finite input, z below a slice boundary, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid parameters or configuration (violated type invariants).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed to meet its own accuracy contract.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kglab

namespace kglab {

/// Not enough usable data for a least-squares fit.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kglab
