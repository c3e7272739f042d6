#pragma once

#include <stdexcept>
#include <string>

namespace gembed {

/// Bad argument supplied by the caller (dimension mismatch, out-of-range
/// parameter, non-finite input).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Cholesky factorization hit a non-positive pivot; the matrix is not SPD.
/// For joint precisions this signals an invalid embedding model.
struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularSystem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// pm exceeds the dense-materialization cap; the exact joint check is
/// unavailable and only the sufficient condition can be used.
struct CapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidModel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularHessian : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Two algebraically equal computation routes disagreed beyond tolerance.
struct InternalConsistencyError : std::logic_error {
  using std::logic_error::logic_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gembed
