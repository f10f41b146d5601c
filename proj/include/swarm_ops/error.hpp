#pragma once

#include <stdexcept>
#include <string>

namespace swarm_ops {

/// Base of every exception thrown by the library. Messages are single-line
/// diagnostics suitable for printing as-is.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario file missing, malformed, or violating an invariant. `field` names
/// the offending JSON path when known.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

class RoutingError : public Error {
 public:
  using Error::Error;
};

class PlannerError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace swarm_ops
