#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace signrec {

// Root of every exception thrown by the library. The CLI maps subclasses to
// exit codes (see cli/cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (rates, sizes, beam width...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor extents that do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Operation invoked in the wrong order, e.g. backward before forward.
class StateError : public Error {
 public:
  using Error::Error;
};

// Bad data values (non-finite coordinates, unknown ids, empty inputs).
class InputError : public Error {
 public:
  using Error::Error;
};

// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Gloss string absent from the vocabulary.
class UnknownGlossError : public InputError {
 public:
  explicit UnknownGlossError(const std::string& gloss)
      : InputError("unknown gloss \"" + gloss + "\""), gloss_(gloss) {}
  const std::string& gloss() const noexcept { return gloss_; }

 private:
  std::string gloss_;
};

}  // namespace signrec
