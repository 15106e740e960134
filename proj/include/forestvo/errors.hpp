#pragma once

#include <stdexcept>
#include <string>

namespace forestvo {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input violates a numerical precondition (zero quaternion, degenerate
// 6D vector, non-rotation matrix, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A file could not be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

// Parse failure with a 1-based line number.
class ParseError : public IoError {
 public:
  ParseError(const std::string& msg, int line)
      : IoError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// A structured record failed schema validation.
class SchemaError : public IoError {
 public:
  using IoError::IoError;
};

// Estimation failed (degenerate configuration, too few samples, ...).
class EstimationError : public Error {
 public:
  using Error::Error;
};

}  // namespace forestvo
