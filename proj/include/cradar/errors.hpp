#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cradar {

/// Invalid configuration or construction input. `field` is a dotted path into
/// the configuration document when one applies (e.g. "scene.coexistence.num_bs").
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Input outside a function's mathematical domain (non-positive duration, etc.).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The EXP3 least-squares design matrix could not be inverted.
class DegenerateContextError : public std::runtime_error {
 public:
  explicit DegenerateContextError(const std::string& message, std::size_t pri = 0)
      : std::runtime_error(message), pri_(pri) {}

  std::size_t pri() const { return pri_; }

 private:
  std::size_t pri_;
};

}  // namespace cradar
