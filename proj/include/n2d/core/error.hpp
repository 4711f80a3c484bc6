#pragma once

#include <stdexcept>
#include <string>

namespace n2d {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or image dimensions that do not fit an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Missing, unreadable or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Training produced non-finite values for too long to continue.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (ranges, counts, option combinations).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace n2d
