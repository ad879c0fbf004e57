#pragma once

#include <stdexcept>
#include <string>

namespace idon {

/// A matrix that should be symmetric positive-definite is not (pivot <= 0).
struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

/// Normal equations are rank-deficient and no regularization was requested.
struct SingularSystem : std::runtime_error {
  explicit SingularSystem(const std::string& what) : std::runtime_error(what) {}
};

/// A gradient component came out NaN/Inf; the current optimization step is invalid.
struct NonFiniteGradient : std::runtime_error {
  explicit NonFiniteGradient(const std::string& what) : std::runtime_error(what) {}
};

/// A time-stepping solver blew past its stability bound.
struct SolverDiverged : std::runtime_error {
  explicit SolverDiverged(const std::string& what) : std::runtime_error(what) {}
};

/// Bad or inconsistent experiment configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// File container violation (bad magic, truncated payload, shape mismatch).
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace idon
