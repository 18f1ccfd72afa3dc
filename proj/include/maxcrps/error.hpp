#pragma once

#include <stdexcept>
#include <string>

namespace maxcrps {

/// Base for every error raised by the library. `exit_code()` maps the
/// category onto the CLI's documented process exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual int exit_code() const noexcept { return 1; }
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 4; }
};

/// Caller violated a shape or consistency contract (dimension mismatch etc.).
class ContractError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

/// Bad input data: non-positive or non-finite observations, unparsable CSV.
class DataError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 3; }
};

/// Numerical failure: non-PD matrix, singular bread, runaway series.
class NumericalError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 4; }
};

class SingularBreadError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace maxcrps
