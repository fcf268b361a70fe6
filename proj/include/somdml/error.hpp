#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace somdml {

// Base of every error raised by the library. `kind()` is a stable,
// machine-readable tag used by the CLI error record.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& message)
      : Error("invalid_input", message) {}
};

class DimensionMismatchError : public Error {
 public:
  DimensionMismatchError(const std::string& what, std::size_t expected,
                         std::size_t actual)
      : Error("dimension_mismatch", what + ": expected " +
                                        std::to_string(expected) + ", got " +
                                        std::to_string(actual)) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double residual)
      : Error("convergence", message + " (residual " +
                                 std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// CSV and dataset errors carry the offending position. Rows are 1-based file
// lines (header included); columns are 0-based cell indices.
class DatasetError : public Error {
 public:
  DatasetError(std::string kind, const std::string& message, long row = -1,
               long column = -1)
      : Error(std::move(kind), message), row_(row), column_(column) {}

  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  long row_;
  long column_;
};

class DegenerateMetricError : public Error {
 public:
  explicit DegenerateMetricError(const std::string& message)
      : Error("degenerate_metric", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error("config", message) {}
};

}  // namespace somdml
