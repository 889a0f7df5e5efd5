#ifndef ABUSENET_ERROR_H_
#define ABUSENET_ERROR_H_

#include <stdexcept>
#include <string>

namespace abusenet {

// Root of every error the library raises. The CLI maps subclasses onto exit
// codes: NumericError -> 3, everything else -> 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input file lacks a required column or has the wrong layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A value inside an input file could not be decoded.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or out-of-range settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Structurally valid input that violates a data invariant (duplicates etc).
class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Checkpoint contents disagree with their manifest.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace abusenet

#endif  // ABUSENET_ERROR_H_
