#pragma once

#include <stdexcept>
#include <string>

namespace sthom {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Requested Euler step violates the scale-resolution rule.
struct StepTooLarge : Error {
  using Error::Error;
};

/// A trajectory or functional left the representable range.
struct NonFinite : Error {
  using Error::Error;
};

/// Paths or fields living on incompatible grids were combined.
struct GridMismatch : Error {
  using Error::Error;
};

/// An ensemble statistic was requested from too small a sample.
struct DegenerateSample : Error {
  using Error::Error;
};

/// Grid does not resolve the highest wavenumber of the medium.
struct GridTooCoarse : Error {
  using Error::Error;
};

/// Iterative solve failed to reach the requested residual.
struct SolverDivergence : Error {
  using Error::Error;
};

/// Experiment configuration is malformed or inconsistent.
struct ConfigError : Error {
  using Error::Error;
};

/// Linear system is rank-deficient beyond the expected constant mode.
struct SingularSystem : Error {
  using Error::Error;
};

/// Resolvent diagnostics show no decreasing trend over the continuation.
struct NoTrend : Error {
  using Error::Error;
};

}  // namespace sthom
