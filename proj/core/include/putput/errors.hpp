#pragma once

#include <stdexcept>
#include <string>

namespace putput {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An assignment does not cover a variable the circuit depends on.
class ScopeError : public Error {
 public:
  using Error::Error;
};

// A circuit violates one of the structural invariants (see validate()).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. The message carries the source line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  explicit ParseError(const std::string& what) : ParseError(what, 0) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

// Input data that is well-formed but unusable (unknown value, bad subset...).
class InputError : public Error {
 public:
  using Error::Error;
};

// CNF distribution exceeded the configured clause budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace putput
