#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfgp {

/// Raised when a caller breaks a documented precondition (shapes, ranges, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cholesky factorization failed even after jitter escalation.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, Eigen::VectorXd params)
      : std::runtime_error(what), params_(std::move(params)) {}

  const Eigen::VectorXd& params() const { return params_; }

 private:
  Eigen::VectorXd params_;
};

/// Every restart of an optimization failed.
class TrainingFailure : public std::runtime_error {
 public:
  TrainingFailure(const std::string& what, std::vector<std::string> diagnostics)
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}

  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MFGP_REQUIRE(cond, msg)                \
  do {                                         \
    if (!(cond)) {                             \
      throw ::mfgp::ContractViolation(msg);    \
    }                                          \
  } while (0)

}  // namespace mfgp
