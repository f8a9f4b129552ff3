#pragma once

#include <stdexcept>
#include <string>

namespace qfc {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands have incompatible or non-square shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix required to be Hermitian is not.
class SymmetryError : public Error {
 public:
  using Error::Error;
};

/// A value violates a type invariant (completeness, trace, positivity,
/// unitarity, probability normalization).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Conditioning on an outcome whose probability is numerically zero.
class DegenerateConditioningError : public Error {
 public:
  using Error::Error;
};

/// An operation's documented precondition does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The measurement admits no asymptotic density-to-pure control.
class NotDpcError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// The requested pure target fails the stabilizability test.
class InfeasibleTargetError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// A fixed plan was asked for more steps than it holds.
class PlanExhaustedError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Malformed serialized input.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace qfc
