#pragma once

#include <stdexcept>
#include <string>

namespace nasnerf {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes disagree (matrix dims, image sizes, batch sizes).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered in a forward or backward pass, or divergent training.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or descriptor.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// File-system or format error; the message carries file/frame context.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nasnerf
