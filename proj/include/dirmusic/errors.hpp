#pragma once

#include <stdexcept>
#include <string>

namespace dirmusic {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A numeric argument lies outside the domain of the operation (NaN, inf).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// No pulse rose above the detection threshold.
class NoPulseFound : public Error {
 public:
  using Error::Error;
};

/// Malformed text input (CSV, pattern file, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dirmusic
