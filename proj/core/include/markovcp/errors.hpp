#pragma once

#include <stdexcept>
#include <string>

namespace markovcp {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied argument violates a documented precondition.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// The chain failed to converge to a stationary distribution (reducible,
// periodic, or mixing slower than the iteration caps allow).
class NotErgodic : public Error {
 public:
  using Error::Error;
};

// Detailed balance does not hold for the supplied kernel/distribution pair.
class NotReversible : public Error {
 public:
  using Error::Error;
};

// The requested quantity is undefined or vacuous for these inputs
// (e.g. a bound that would be >= 1, or a function evaluated off its domain).
class DomainError : public Error {
 public:
  using Error::Error;
};

// The data does not pin down the estimate (unvisited states, too few
// usable autocorrelation lags, ...).
class InsufficientData : public Error {
 public:
  using Error::Error;
};

// A data value is structurally unusable (e.g. nonpositive price).
class InvalidData : public Error {
 public:
  using Error::Error;
};

// The regression design is degenerate.
class SingularFit : public Error {
 public:
  using Error::Error;
};

// CSV header does not match the expected schema.
class BadHeader : public Error {
 public:
  using Error::Error;
};

// A row failed to parse; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, long line)
      : Error(message + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

// Unknown output format requested.
class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};

// Filesystem failure, message forwarded verbatim.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace markovcp
