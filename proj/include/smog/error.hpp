// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smog {

/// Root of every exception the library throws.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
  public:
    using Error::Error;
};

/// Failure talking to a knowledge-graph, embedding or chat backend.
class BackendError : public Error {
  public:
    using Error::Error;
};

/// Retryable backend failure: unreachable endpoint, timeout, 429 or 5xx.
class TransientError : public BackendError {
  public:
    using BackendError::BackendError;
};

/// The backend answered, but with something we cannot interpret.
class ProtocolError : public BackendError {
  public:
    using BackendError::BackendError;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Bad input data. `line()` is 1-based, 0 when no line applies.
class DataError : public Error {
  public:
    explicit DataError(const std::string& what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line)
    {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

}  // namespace smog
