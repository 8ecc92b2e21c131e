#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tpe {

enum class ErrorClass {
  invalid_space,
  invalid_embedding,
  unsupported,
  dimension_mismatch,
  invalid_parameter,
  non_unique_steady_state,
  numerical_failure,
  convergence_failure,
  step_size,
  undefined_estimate,
  degenerate_parameters,
  config,
  io
};

inline const char* error_class_name(ErrorClass c) noexcept {
  switch (c) {
    case ErrorClass::invalid_space: return "invalid_space";
    case ErrorClass::invalid_embedding: return "invalid_embedding";
    case ErrorClass::unsupported: return "unsupported";
    case ErrorClass::dimension_mismatch: return "dimension_mismatch";
    case ErrorClass::invalid_parameter: return "invalid_parameter";
    case ErrorClass::non_unique_steady_state: return "non_unique_steady_state";
    case ErrorClass::numerical_failure: return "numerical_failure";
    case ErrorClass::convergence_failure: return "convergence_failure";
    case ErrorClass::step_size: return "step_size";
    case ErrorClass::undefined_estimate: return "undefined_estimate";
    case ErrorClass::degenerate_parameters: return "degenerate_parameters";
    case ErrorClass::config: return "config";
    case ErrorClass::io: return "io";
  }
  return "unknown";
}

// Process exit code used by the command line front end.
inline int exit_code_for(ErrorClass c) noexcept {
  switch (c) {
    case ErrorClass::config:
    case ErrorClass::io:
    case ErrorClass::invalid_parameter:
    case ErrorClass::invalid_space:
    case ErrorClass::unsupported:
      return 2;
    case ErrorClass::convergence_failure:
      return 4;
    default:
      return 3;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& message)
      : std::runtime_error(message), cls_(cls) {}

  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

// Raised when the truncation ladder hits its ceiling. drift holds the last
// relative change of each observable.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message,
                   std::vector<std::pair<std::string, double>> drift)
      : Error(ErrorClass::convergence_failure, message), drift_(std::move(drift)) {}

  const std::vector<std::pair<std::string, double>>& drift() const noexcept { return drift_; }

 private:
  std::vector<std::pair<std::string, double>> drift_;
};

[[noreturn]] inline void fail(ErrorClass c, const std::string& message) {
  throw Error(c, message);
}

}  // namespace tpe
