#pragma once

#include <stdexcept>
#include <string>

namespace infobudget {

// Process exit codes used by the CLI. Library code throws; the CLI maps the
// exception family to one of these.
enum class ExitCode : int {
  Clean = 0,
  Usage = 1,
  Data = 2,
  Backend = 3,
  Invariant = 4,
  Shortfall = 5,  // ran to completion, but some items had fewer permutations than requested
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::Data; }
};

// Argument outside the mathematical domain of an operation (e.g. KL against a
// degenerate Bernoulli).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Caller supplied malformed input (negative budget, empty list, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Input files or records are inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::Invariant; }
};

class BackendError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::Backend; }
};

class TransportError : public BackendError {
 public:
  using BackendError::BackendError;
};

class MalformedResponseError : public BackendError {
 public:
  using BackendError::BackendError;
};

class NonFiniteResponseError : public BackendError {
 public:
  using BackendError::BackendError;
};

// Replay lookup failed; the message carries the (item_id, permutation) key.
class MissingRecordError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace infobudget
