#pragma once

#include <stdexcept>
#include <string>

namespace spinbench {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerically invalid input (negative temperature, zero field, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Ill-formed or insufficient data (too few points, parse failure, bad grid).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid sequence/command parameters (bad CPMG order, tau below dead time).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Structurally invalid pulse program (unbound delay, missing acquire).
class ProgramError : public Error {
 public:
  using Error::Error;
};

/// Jacobian column is identically zero; the named parameter cannot be fit.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, std::string parameter)
      : Error(what), parameter_(std::move(parameter)) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

} // namespace spinbench
