#pragma once

#include <stdexcept>
#include <string>

namespace opsaddle {

// Bad arguments or malformed configuration. CLI exit code 2.
struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One of the paper-style assumptions (A: policy smoothness, B: singular-value
// floors, C: data coverage, D: variance bounds) fails on the given instance.
// CLI exit code 3.
struct AssumptionViolation : std::runtime_error {
  AssumptionViolation(char which, const std::string& detail)
      : std::runtime_error(std::string("assumption ") + which +
                           " violated: " + detail),
        assumption(which) {}
  char assumption;
};

// Retriable estimation failure (e.g. a singular empirical covariance in the
// least-square oracle); the caller may raise the sample budget and retry.
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-retriable numerical failure. CLI exit code 4.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace opsaddle
