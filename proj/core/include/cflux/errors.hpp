#pragma once

#include <stdexcept>
#include <string>

namespace cflux {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes incompatible with the requested operation.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation (e.g. log of a
/// nonpositive value).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Input that is structurally valid but degenerate for the operation
/// (all-zero embedding matrix, rank-0 data handed to PCA).
class DegenerateInputError : public Error {
public:
  using Error::Error;
};

/// Index or token id out of range.
class IndexError : public Error {
public:
  using Error::Error;
};

/// A documented precondition of an operation was violated.
class ContractError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration value or unknown configuration key.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Filesystem-level failure (missing, empty, unreadable, unwritable).
class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed serialized data; the message names the byte offset.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Training produced non-finite values.
class DivergenceError : public Error {
public:
  using Error::Error;
};

} // namespace cflux
