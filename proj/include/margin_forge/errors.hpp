#ifndef MARGIN_FORGE_ERRORS_HPP
#define MARGIN_FORGE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace margin_forge {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class SingleClassError : public Error {
 public:
  using Error::Error;
};

class InvalidDataError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class MissingValueError : public EncodingError {
 public:
  using EncodingError::EncodingError;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. `line()` is 1-based, 0 when no line applies.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace margin_forge

#endif  // MARGIN_FORGE_ERRORS_HPP
