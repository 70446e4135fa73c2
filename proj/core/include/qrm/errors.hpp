#pragma once

#include <stdexcept>
#include <string>

namespace qrm {

// Base of every error raised by the library. exit_code() is the CLI contract:
// 1 validation, 2 numerical non-convergence, 3 I/O.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a conversion or builder.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

}  // namespace qrm
