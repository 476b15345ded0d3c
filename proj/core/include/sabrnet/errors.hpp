#pragma once

#include <stdexcept>
#include <string>

namespace sabrnet {

/// Bad inputs, bad option/model parameters, impossible requests.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Target price admits no implied volatility (outside no-arbitrage bounds).
class NoSolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver hit its iteration cap; carries the best iterate seen.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_iterate, double residual)
      : std::runtime_error(what), best_iterate_(best_iterate), residual_(residual) {}
  double best_iterate() const { return best_iterate_; }
  double residual() const { return residual_; }

 private:
  double best_iterate_;
  double residual_;
};

/// Corrupt or truncated file, version mismatch, missing data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad run configuration (unknown key, unparsable value).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training diverged; carries nothing beyond the message (the last finite
/// state is returned through the TrainingError-aware API in netfit).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sabrnet
