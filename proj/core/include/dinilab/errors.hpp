#pragma once

#include <stdexcept>
#include <string>

namespace dinilab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a formula (s <= 0, x on the boundary, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input: empty/unsorted grids, mismatched dimensions, bad tables.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A root bracket or index range could not be established.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A shell-decay test reached its shell budget without a verdict.
class IndeterminateError : public Error {
 public:
  IndeterminateError(const std::string& what, int shells_used)
      : Error(what), shells_used_(shells_used) {}
  int shells_used() const noexcept { return shells_used_; }

 private:
  int shells_used_;
};

/// Newton or the inner linear solver did not converge.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// A property that must hold by construction was observed to fail.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// The spec of omega does not satisfy the structural conditions an operation needs.
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration failed schema validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dinilab
