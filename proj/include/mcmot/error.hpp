#pragma once

#include <stdexcept>
#include <string>

namespace mcmot {

/// Broad failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorCategory {
  InvalidInput = 2,   // malformed data, violated preconditions
  Schema = 3,         // file schema / parse errors
  Infeasible = 4,     // an LP that must be feasible is not
  Numerical = 5,      // solver could not certify tolerances
  Consistency = 6,    // internal invariant broken (e.g. sandwich violated)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidInput: return "invalid-input";
    case ErrorCategory::Schema: return "schema";
    case ErrorCategory::Infeasible: return "infeasible";
    case ErrorCategory::Numerical: return "numerical";
    case ErrorCategory::Consistency: return "consistency";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorCategory c, const std::string& msg) {
  throw Error(c, msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(ErrorCategory::InvalidInput, msg);
}

}  // namespace mcmot
