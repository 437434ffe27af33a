#pragma once

#include <stdexcept>
#include <string>

namespace tmee {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A streaming input (error sample or labeled observation) that cannot be
/// consumed, e.g. a non-finite value. The receiving state is left unchanged.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Compressor calibration needs q1 < 0 < q3.
class CalibrationError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Quadrature grid unable to resolve the supplied density.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Every Monte-Carlo trial diverged, or some other unrecoverable numeric
/// failure.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, int line, const std::string& message)
      : std::runtime_error(format(key, line, message)),
        key_(std::move(key)),
        line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& key, int line,
                            const std::string& message) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!key.empty()) out += "'" + key + "': ";
    return out + message;
  }

  std::string key_;
  int line_;
};

}  // namespace tmee
