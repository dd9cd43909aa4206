#pragma once

#include <stdexcept>
#include <string>

namespace gcsit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or manifold dimensions that do not match.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input matrix is (numerically) rank deficient or singular.
class RankError : public Error {
 public:
  using Error::Error;
};

/// A precondition on numerical state was violated (e.g. inputs not aligned).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine produced an unusable result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// System dimensions for which interference alignment is not proper.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Request exceeds a desk-scale resource guard (codebook size, retries).
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Too many Monte Carlo trials were excluded for solver non-convergence.
class ExclusionError : public Error {
 public:
  using Error::Error;
};

}  // namespace gcsit
