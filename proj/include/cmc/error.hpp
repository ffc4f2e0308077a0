#pragma once

#include <stdexcept>
#include <string>

namespace cmc {

/// Error categories map onto CLI exit codes (config 2, divergence 3,
/// assertion 4, anything else 1).
enum class ErrorKind { config, divergence, assertion, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long long step)
      : Error(ErrorKind::divergence, what + " (step " + std::to_string(step) + ")"), step_(step) {}
  long long step() const noexcept { return step_; }

 private:
  long long step_;
};

class AssertionError : public Error {
 public:
  explicit AssertionError(const std::string& what) : Error(ErrorKind::assertion, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::divergence: return 3;
    case ErrorKind::assertion: return 4;
    case ErrorKind::numerical: return 1;
  }
  return 1;
}

}  // namespace cmc
