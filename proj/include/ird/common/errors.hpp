#pragma once

#include <stdexcept>
#include <string>

namespace ird {

// Caller handed in something that violates an operation's precondition
// (shape mismatch, out-of-range config value, duplicate id, ...).
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical or structural failure detected while running (non-finite loss,
// infeasible plan, corrupt file). Message carries the diagnostics.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ird
