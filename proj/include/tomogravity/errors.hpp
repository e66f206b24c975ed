#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tomo {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of matrices/vectors do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A precondition on argument values is violated (negative load, phi <= 0, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// The constraint set is empty: observed loads cannot be produced by any
// nonnegative traffic vector on the given routes.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the file name and 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

}  // namespace tomo
