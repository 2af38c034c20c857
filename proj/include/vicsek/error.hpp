#pragma once

#include <stdexcept>
#include <string>

namespace vicsek {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

/// Requested object exceeds the configured memory budget.
struct SizeError : Error {
  using Error::Error;
};

/// Structural precondition violated (non-convex set, empty complement, ...).
struct ContractError : Error {
  using Error::Error;
};

/// Iterative solver failed to reach its tolerance.
struct SolverError : Error {
  using Error::Error;
};

/// Computation would need points beyond the truncated cable system.
struct MarginError : Error {
  MarginError(const std::string& what, int suggested_level)
      : Error(what + " (suggested ambient level " +
              std::to_string(suggested_level) + ")"),
        suggested_level(suggested_level) {}
  int suggested_level;
};

/// Invalid configuration or command line.
struct UsageError : Error {
  using Error::Error;
};

}  // namespace vicsek
