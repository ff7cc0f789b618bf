// Error taxonomy shared by all modules.
// The CLI maps these onto process exit codes:
//   ValidationError -> 2, InfeasibleError -> 3, VerificationError -> 4.
#pragma once

#include <stdexcept>
#include <string>

namespace fso {

/// Bad configuration or bad argument values (wrong range, unknown key, ...).
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string &what) : std::runtime_error(what) {}
};

/// Mathematical domain violations (log of non-positive argument, ...).
class DomainError : public std::domain_error {
  public:
    explicit DomainError(const std::string &what) : std::domain_error(what) {}
};

/// Non-finite state or other runtime failures inside a simulation loop.
class SimulationError : public std::runtime_error {
  public:
    explicit SimulationError(const std::string &what) : std::runtime_error(what) {}
};

/// No feasible point found by the synthesis machinery.
class InfeasibleError : public std::runtime_error {
  public:
    explicit InfeasibleError(const std::string &what) : std::runtime_error(what) {}
};

/// A certificate or cross-check failed after a result was produced.
class VerificationError : public std::runtime_error {
  public:
    explicit VerificationError(const std::string &what) : std::runtime_error(what) {}
};

/// Numerical conditioning failures (near-singular solves).
class ConditioningError : public std::runtime_error {
  public:
    explicit ConditioningError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace fso
