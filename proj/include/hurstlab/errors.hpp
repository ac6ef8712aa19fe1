#pragma once

#include <stdexcept>
#include <string>

namespace hurstlab {

// Base class for everything thrown by this library. Messages name the
// violated precondition or invariant so the CLI can surface them verbatim.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Filter construction: coefficients do not sum to zero.
class MomentConditionViolated : public Error {
 public:
  using Error::Error;
};

// Filter construction: all coefficients below tolerance, or a trailing zero.
class DegenerateFilter : public Error {
 public:
  using Error::Error;
};

class PathTooShort : public Error {
 public:
  using Error::Error;
};

class EmptyNeighborhood : public Error {
 public:
  using Error::Error;
};

// All squared variations in a window vanished; log of zero is undefined.
class DegenerateVariations : public Error {
 public:
  using Error::Error;
};

// A weight matrix for a generalized least-squares step is numerically
// singular. Estimators catch this internally and fall back to equal weights.
class SingularWeightMatrix : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class MissingSeed : public Error {
 public:
  using Error::Error;
};

class OutOfTableRange : public Error {
 public:
  using Error::Error;
};

// The exact 4x4 lag covariance handed to the Monte Carlo sampler has an
// eigenvalue below -1e-8 * trace, i.e. it is not a covariance at all.
class NonPositiveDefiniteLagCov : public Error {
 public:
  using Error::Error;
};

class DegenerateSpec : public Error {
 public:
  using Error::Error;
};

}  // namespace hurstlab
