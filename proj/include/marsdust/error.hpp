#pragma once

#include <stdexcept>
#include <string>

namespace marsdust {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument, parameter or configuration. Maps to CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Region or index outside the source raster.
class BoundsError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Operands whose dimensions or channel counts disagree.
class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A statistical estimate could not be formed from the given data.
class EstimationError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Filesystem failure: unreadable input, unwritable output. Maps to CLI exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

/// A file was readable but its content is not an accepted image.
class DecodeError : public IoError {
public:
    using IoError::IoError;
};

/// Structured file (weights, manifest, json) that is truncated or inconsistent.
class FormatError : public IoError {
public:
    using IoError::IoError;
};

/// A record expected in a manifest was not found.
class LookupError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace marsdust
