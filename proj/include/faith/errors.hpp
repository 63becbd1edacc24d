#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace faith {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A record, feature name or category does not conform to the feature schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Input data has no usable rows.
class EmptyDataError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file, unknown config key, join miss and similar.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameter combination (alpha outside (0,1), B = 0, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numeric failure outside the LP solver (e.g. a covariance factorization).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The remote model endpoint misbehaved.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// The simplex engine gave up. Carries the tail of the iteration log.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<std::string> trace)
      : Error(what), trace_(std::move(trace)) {}

  const std::vector<std::string>& trace() const noexcept { return trace_; }

 private:
  std::vector<std::string> trace_;
};

/// The dual-face LP was unbounded: the direction leaves the simplex or the
/// supplied dual optimum was not tight.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

}  // namespace faith
