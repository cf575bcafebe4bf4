#pragma once

#include <stdexcept>
#include <string>

namespace riemstat {

// Base of every error raised by the library. Numerical failures and input
// failures are kept apart so front ends can map them to distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

// Log (or anything built on it) requested across the cut locus.
class CutLocusError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergenceError : public NumericalError {
 public:
  NoConvergenceError(const std::string& what, int iterations)
      : NumericalError(what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations_(iterations) {}
  int iterations() const { return iterations_; }

 private:
  int iterations_;
};

// A linear system or covariance block that must be positive definite is not.
class SingularSystemError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Zero vector projected onto a sphere, rank-deficient Grassmann frame, etc.
class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

class DimensionMismatchError : public InputError {
 public:
  using InputError::InputError;
};

// Malformed manifold spec strings, dataset files or model files.
class ParseError : public InputError {
 public:
  using InputError::InputError;
};

// Scenario or command configuration that is missing or inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace riemstat
