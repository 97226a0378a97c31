#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtree {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `position()` is the byte offset of the
/// offending token in the input.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Division by zero, reciprocal of zero, bad exponent.
class EvalError : public Error {
 public:
  using Error::Error;
};

class CanonError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or schema-violating input files and configs.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Failures during training or decoding (e.g. a non-finite loss).
class RuntimeError : public Error {
 public:
  using Error::Error;
};

}  // namespace mtree
