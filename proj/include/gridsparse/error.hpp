#pragma once

#include <stdexcept>
#include <string>

namespace gridsparse {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed case-file or config syntax. Carries the 1-based line number
/// (0 when the position is unknown).
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Input violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A constraint set admits no solution within tolerance.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// File system failure; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridsparse
