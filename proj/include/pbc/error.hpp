#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pbc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A moment or integral that does not exist (infinite expectation).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// An iterative method or quadrature failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Requested operation is not available for this distribution variant.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A checked invariant failed at runtime (engine self-test).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// File system or stream failure; message carries the OS diagnostic.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input record. `line` is 1-based and counts the header.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string column, const std::string& what)
      : Error("line " + std::to_string(line) +
              (column.empty() ? std::string() : ", column '" + column + "'") +
              ": " + what),
        line_(line),
        column_(std::move(column)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::string column_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace detail
}  // namespace pbc
