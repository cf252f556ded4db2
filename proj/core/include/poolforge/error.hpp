#pragma once

#include <stdexcept>
#include <string>

namespace poolforge {

// Root of the library's exception hierarchy. The CLI maps the concrete
// types below onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced or consumed, or a numeric check failed.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A caller violated an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid model, layer, or training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized data (records, checkpoints, prediction files).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable input data.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace poolforge
