#pragma once

#include <stdexcept>

namespace progresskit {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input text or JSON; messages carry byte offsets or line numbers.
struct ParseError : Error {
  using Error::Error;
};

// Structurally valid input that violates the documented schema.
struct SchemaError : Error {
  using Error::Error;
};

// Annotation value outside [0, 100].
struct ValueRangeError : SchemaError {
  using SchemaError::SchemaError;
};

// Numeric or shape problems in datasets: non-finite features, empty sets,
// misaligned keys.
struct DataError : Error {
  using Error::Error;
};

// Filesystem failures.
struct IoError : Error {
  using Error::Error;
};

}  // namespace progresskit
