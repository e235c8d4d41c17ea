#ifndef CTR_ERRORS_HPP_
#define CTR_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ctr {

// Preconditions violated by a caller (mismatched cache, mixed-domain batch, ...).
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Array dimensions inconsistent with the operation.
class ShapeError : public ContractError {
 public:
  explicit ShapeError(const std::string& msg) : ContractError(msg) {}
};

// Non-finite values where finite ones are required (NaN gradients, overflowed
// activations).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration (bad windows, unachievable calibration targets, ...).
// CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input data (parse failures carry the line number). CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A metric has no defined value on the given input (single-class AUC, ...).
class MetricUndefinedError : public std::runtime_error {
 public:
  explicit MetricUndefinedError(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace ctr

#endif  // CTR_ERRORS_HPP_
