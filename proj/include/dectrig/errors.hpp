#pragma once

#include <stdexcept>
#include <string>

namespace dectrig {

// Exception hierarchy. The CLI maps each leaf onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Malformed input, violated precondition, or rejected design parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 1; }
};

/// Singular systems, non-Hurwitz closed loops, non-finite dynamics.
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

}  // namespace dectrig
