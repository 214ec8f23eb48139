#pragma once

#include <stdexcept>
#include <string>

namespace rfmfs {

// Base of every error raised by the library. The CLI maps any Error to a
// nonzero exit status with what() as the diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument lies outside the domain of a function (e.g. |z| >= 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid model, schedule, distribution or algorithm parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A prefix length or coordinate index is out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// Quadrature produced a non-finite node value or an empty mass.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

// The external field has vanishing sample standard deviation; the
// two-dimensional reduction is not defined.
class DegenerateFieldError : public Error {
 public:
  using Error::Error;
};

// A distributional assumption (A1/A2/A4) required by an operation fails.
class AssumptionError : public Error {
 public:
  using Error::Error;
};

// The operation was requested outside the phase it is defined for.
class PhaseError : public Error {
 public:
  using Error::Error;
};

// Iterative solver failed; carries the last iterate and its residual.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_x, double last_y, double residual)
      : Error(what), last_x_(last_x), last_y_(last_y), residual_(residual) {}

  double last_x() const { return last_x_; }
  double last_y() const { return last_y_; }
  double residual() const { return residual_; }

 private:
  double last_x_;
  double last_y_;
  double residual_;
};

}  // namespace rfmfs
