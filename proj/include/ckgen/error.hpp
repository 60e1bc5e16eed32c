#pragma once

#include <stdexcept>
#include <string>

namespace ckgen {

/// Process exit codes used by the command-line front-end.
enum class ExitCode : int {
  Pass = 0,
  InvariantViolation = 2,
  ConvergenceFailure = 3,
  InputError = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Malformed or inconsistent input (files, indices, graphs).
class InputError : public Error {
 public:
  explicit InputError(const std::string& what)
      : Error(ExitCode::InputError, what) {}
};

/// A mathematical invariant the construction relies on does not hold.
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what)
      : Error(ExitCode::InvariantViolation, what) {}
};

/// An iterative limit did not settle within its budget.
class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what)
      : Error(ExitCode::ConvergenceFailure, what) {}
};

}  // namespace ckgen
