// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace geoprox {

/// Root of the library's exception hierarchy. `exit_code()` is what the CLI
/// returns when the error escapes a command.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual int exit_code() const noexcept { return 1; }
};

/// Invalid configuration or command-line arguments.
class ConfigError : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

/// Malformed or inconsistent input data.
class DataError : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 3; }
};

/// Tensor shapes that do not conform to an operation.
class DimensionError : public DataError {
public:
    using DataError::DataError;
};

/// Coordinates or times outside the valid domain of a transform.
class DomainError : public DataError {
public:
    using DataError::DataError;
};

/// Non-finite values encountered during optimization.
class NumericalError : public Error {
public:
    using Error::Error;
    [[nodiscard]] int exit_code() const noexcept override { return 4; }
};

/// Operation requested on a model regime that does not support it.
class UnsupportedRegimeError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// A broken internal contract (e.g. a frozen parameter changed).
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace geoprox
