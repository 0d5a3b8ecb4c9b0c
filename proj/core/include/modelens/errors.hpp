#pragma once

#include <stdexcept>
#include <string>

namespace modelens {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments, inconsistent dimensions, malformed configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file that could not be decoded (bad magic, truncated payload, ...).
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Non-convergence, NaN blow-up and other failures of a numerical method.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace modelens
