#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ras {

/// Raised when a caller breaks an operation's precondition (dimension
/// mismatch, invalid handle, unknown tag, ...).
class ContractViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Raised for infeasible user-facing configuration (grid/proc mismatch,
/// bad delay model, p = 0, ...).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Output could not be written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Cholesky hit a non-positive pivot.
class NotSpdError : public std::runtime_error {
public:
  NotSpdError(std::size_t row, double pivot)
      : std::runtime_error("matrix is not SPD: non-positive pivot " +
                           std::to_string(pivot) + " at row " +
                           std::to_string(row)),
        row_(row), pivot_(pivot) {}

  std::size_t row() const noexcept { return row_; }
  double pivot() const noexcept { return pivot_; }

private:
  std::size_t row_;
  double pivot_;
};

} // namespace ras
