#pragma once

#include <stdexcept>
#include <string>

namespace oodlab {

// Base of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
  using Error::Error;
};

class InvalidInput : public Error {
public:
  using Error::Error;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

/// Raised when a NaN/Inf shows up in gradients, parameters or the loss.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, long iteration = -1)
      : Error(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

private:
  long iteration_;
};

}  // namespace oodlab
