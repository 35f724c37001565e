#pragma once

#include <stdexcept>
#include <string>

namespace unishrink {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Cholesky factorization hit a non-positive pivot.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "not_positive_definite"; }
};

/// Argument outside the domain of a density or inverse CDF.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_error"; }
};

/// A sampler state violates its truncation constraints; the chain cannot continue.
class InfeasibleState : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "infeasible_state"; }
};

/// Underflow fallbacks exceeded the tolerated rate, or a conditional is improper.
class NumericalFailure : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical_failure"; }
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid_spec"; }
};

class RhoOutOfRange : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "rho_out_of_range"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io_error"; }
};

}  // namespace unishrink
