#pragma once

#include <stdexcept>
#include <string>

namespace metaloc {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand extents do not conform for an operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A NaN or Inf appeared in a loss or a parameter update.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed, missing, or insufficient input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace metaloc
