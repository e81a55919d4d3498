#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hstop {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Short machine-readable tag, e.g. "validation" or "solver".
  virtual const char* code() const noexcept { return "error"; }
};

struct Violation {
  std::string field;
  std::string reason;
};

/// One or more model invariants do not hold.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }
  const char* code() const noexcept override { return "validation"; }

 private:
  std::vector<Violation> violations_;
};

/// Bad argument to an operation (non-positive dt, empty grid, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "invalid_argument"; }
};

/// A numerical solver failed to produce an answer meeting its postconditions.
class SolverError : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "solver"; }
};

/// prior_pi is 0 or 1, so the posterior is constant and the ratio is 0 or infinite.
class DegeneratePrior : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "degenerate_prior"; }
};

}  // namespace hstop
