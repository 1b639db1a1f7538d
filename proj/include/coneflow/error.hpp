#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace coneflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Raised when an endpoint reaches (or would be projected behind) the cone tip.
class TipCollision : public Error {
 public:
  using Error::Error;
};

class BoundaryViolation : public Error {
 public:
  using Error::Error;
};

// ∫k² ds too small for a quantity that divides by it.
class DegenerateCurvature : public Error {
 public:
  using Error::Error;
};

class UnsupportedOrder : public Error {
 public:
  using Error::Error;
};

class StepperFailure : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

struct ConfigIssue {
  std::string path;  // dotted key, e.g. "cone.theta2"
  std::string rule;  // violated invariant
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues)
      : Error(format(issues)), issues_(std::move(issues)) {}
  ConfigError(std::string path, std::string rule)
      : ConfigError(std::vector<ConfigIssue>{{std::move(path), std::move(rule)}}) {}

  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string format(const std::vector<ConfigIssue>& issues) {
    std::string out = "invalid config:";
    for (const auto& i : issues) out += "\n  " + i.path + ": " + i.rule;
    return out;
  }

  std::vector<ConfigIssue> issues_;
};

}  // namespace coneflow
