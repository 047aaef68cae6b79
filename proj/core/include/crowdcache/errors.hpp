#pragma once

#include <stdexcept>
#include <string>

namespace crowdcache {

/// Bad arguments: dimension mismatches, out-of-range indices, invalid parameters.
class InvalidInputError : public std::invalid_argument {
 public:
  explicit InvalidInputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A quantity that has no value in the current state, e.g. the contraction
/// constant of a disconnected graph.
class UndefinedQuantityError : public std::runtime_error {
 public:
  explicit UndefinedQuantityError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solver exhausted its budget without meeting its tolerance.
class SolverFailureError : public std::runtime_error {
 public:
  explicit SolverFailureError(const std::string& what) : std::runtime_error(what) {}
};

/// The iteration error grew explosively; the step-size is too large.
class StepSizeTooLargeError : public std::runtime_error {
 public:
  explicit StepSizeTooLargeError(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset ingestion problem; message carries the offending line or id.
class IngestError : public std::runtime_error {
 public:
  explicit IngestError(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration parsing/validation problem; message names the key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace crowdcache
