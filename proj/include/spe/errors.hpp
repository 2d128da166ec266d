#pragma once

#include <stdexcept>
#include <string>

namespace spe {

/// Base class for all toolkit errors. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad inputs: shape mismatches, out-of-range parameters, malformed requests.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Files named by a manifest are missing or unreadable.
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// An adapter or plugin violated its output contract (count, shape, format).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// The reference segmenter failed: nonzero exit, timeout, missing outputs.
class ReferenceError : public Error {
 public:
  ReferenceError(const std::string& msg, std::string stderr_output = {})
      : Error(msg), stderr_output_(std::move(stderr_output)) {}
  const std::string& stderr_output() const { return stderr_output_; }

 private:
  std::string stderr_output_;
};

/// Pair collection could not produce a usable pair set.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// Least-squares fit infeasible (degenerate predictor, domain violation).
class FitError : public Error {
 public:
  using Error::Error;
};

/// Mapping evaluated outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Structured file could not be parsed or has an unknown schema.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure on a path the toolkit needs.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Synthetic-harness misconfiguration (non-monotone curve, unknown query).
class HarnessError : public Error {
 public:
  using Error::Error;
};

/// A requested set score has no defined per-image values. CLI exit 3.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// A calibration artifact does not match the requested run. CLI exit 4.
class ArtifactMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace spe
