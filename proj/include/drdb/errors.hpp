#pragma once

#include <stdexcept>
#include <string>

namespace drdb {

// Every library error derives from Error. The category steers the CLI exit
// code: validation failures (bad input files, bad configuration) exit 2,
// estimation failures (degenerate folds, non-convergence) exit 3.
enum class ErrorCategory { validation, estimation };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

class MissingColumnError : public Error {
 public:
  explicit MissingColumnError(const std::string& column)
      : Error(ErrorCategory::validation, "MissingColumn: " + column) {}
};

class NonBinaryTreatmentError : public Error {
 public:
  NonBinaryTreatmentError(long row, const std::string& value)
      : Error(ErrorCategory::validation,
              "NonBinaryTreatment: row " + std::to_string(row) +
                  " has t = " + value) {}
};

class NonFiniteValueError : public Error {
 public:
  NonFiniteValueError(long row, const std::string& column)
      : Error(ErrorCategory::validation,
              "NonFiniteValue: row " + std::to_string(row) + ", column " +
                  column) {}
};

class TooFewRowsError : public Error {
 public:
  explicit TooFewRowsError(const std::string& what)
      : Error(ErrorCategory::estimation, "TooFewRows: " + what) {}
};

class EmptyArmError : public Error {
 public:
  explicit EmptyArmError(int arm)
      : Error(ErrorCategory::estimation,
              "EmptyArm: no rows with t = " + std::to_string(arm)) {}
};

class TooFewObservationsError : public Error {
 public:
  explicit TooFewObservationsError(const std::string& what)
      : Error(ErrorCategory::estimation, "TooFewObservations: " + what) {}
};

class RankDeficientError : public Error {
 public:
  explicit RankDeficientError(const std::string& what)
      : Error(ErrorCategory::estimation, "RankDeficient: " + what) {}
};

class NoConvergenceError : public Error {
 public:
  NoConvergenceError(int iterations, double grad_norm)
      : Error(ErrorCategory::estimation,
              "NoConvergence: " + std::to_string(iterations) +
                  " iterations, gradient norm " + std::to_string(grad_norm)) {}
};

class DegenerateFoldError : public Error {
 public:
  DegenerateFoldError(int fold, const std::string& what)
      : Error(ErrorCategory::estimation,
              "DegenerateFold: fold " + std::to_string(fold) + ": " + what) {}
};

class LengthMismatchError : public Error {
 public:
  explicit LengthMismatchError(const std::string& what)
      : Error(ErrorCategory::estimation, "LengthMismatch: " + what) {}
};

class EmptySubgroupError : public Error {
 public:
  explicit EmptySubgroupError(const std::string& what)
      : Error(ErrorCategory::estimation, "EmptySubgroup: " + what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::validation, "ConfigError: " + what) {}
};

}  // namespace drdb
