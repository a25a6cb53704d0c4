#pragma once

#include <stdexcept>
#include <string>

namespace liner {

// Validation-class failures (bad inputs, bad config). The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class PreconditionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConsistencyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LoadError : public ValidationError {
 public:
  LoadError(const std::string& what, long row)
      : ValidationError(row >= 0 ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
  long row() const { return row_; }

 private:
  long row_;
};

// Numerical failures (root bracketing, fixed points, estimation). Exit code 2.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EstimationError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace liner
