#pragma once

#include <stdexcept>
#include <string>

namespace codql {

/// Invalid configuration value. `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A caller broke an operation's precondition (sizes, indices, empty sets).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or version-mismatched binary data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Route scenario not realizable on the configured grid.
class ScenarioError : public ConfigError {
 public:
  explicit ScenarioError(const std::string& what) : ConfigError("sim.scenario", what) {}
};

}  // namespace codql
