#pragma once

#include <stdexcept>
#include <string>

namespace qes {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates an operation precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class RootRefinementFailure : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

/// Richardson-extrapolated eigenvalues did not settle before the grid limit.
class NotConverged : public Error {
 public:
  using Error::Error;
};

/// The eigenfunction tail at the outer boundary is not negligible.
class DomainTooSmall : public Error {
 public:
  using Error::Error;
};

class MonotonicityViolation : public Error {
 public:
  using Error::Error;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

/// theta^2 + 4 varpi theta <= 0, so the reduction to the radial problem is undefined.
class InvalidAlpha : public Error {
 public:
  using Error::Error;
};

class InvalidMass : public Error {
 public:
  using Error::Error;
};

}  // namespace qes
