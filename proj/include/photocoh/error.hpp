#pragma once

#include <stdexcept>
#include <string>

namespace photocoh {

/// Invalid physical input (non-positive pressure, bad mode grid, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A spectrum, filter or subset that ended up carrying no weight.
class EmptyResultError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Estimator cannot operate at the given resolution or span.
class EstimatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration file problems; `key()` names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// A result that breaks a stated invariant (e.g. a non-monotone sweep).
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace photocoh
