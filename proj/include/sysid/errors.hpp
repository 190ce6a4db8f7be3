#pragma once

#include <stdexcept>
#include <string>

namespace sysid {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments, malformed configuration, or violated preconditions.
/// The CLI maps these to exit code 2.
class InvalidInputError : public Error {
  public:
    using Error::Error;
};

/// Unknown builtin system or missing resource.
class NotFoundError : public InvalidInputError {
  public:
    using InvalidInputError::InvalidInputError;
};

/// Requested Markov length exceeds the rollout length (T1 > T2).
class LengthOrderError : public InvalidInputError {
  public:
    using InvalidInputError::InvalidInputError;
};

/// Dataset lacks the stored noise records an operation requires.
class IncompleteDatasetError : public InvalidInputError {
  public:
    using InvalidInputError::InvalidInputError;
};

/// Markov horizon too short for the requested Hankel dimensions.
class InsufficientHorizonError : public InvalidInputError {
  public:
    using InvalidInputError::InvalidInputError;
};

/// Runtime numeric failures. The CLI maps these to exit code 3.
class NumericError : public Error {
  public:
    using Error::Error;
};

/// A matrix required to have full rank is numerically rank deficient.
class RankDeficiencyError : public NumericError {
  public:
    RankDeficiencyError(const std::string& what, double condition_estimate)
        : NumericError(what), condition(condition_estimate) {}
    double condition;
};

/// The regressor Gram matrix is too close to singular to solve; the
/// dataset does not excite all input directions.
class UnderExcitationError : public NumericError {
  public:
    UnderExcitationError(const std::string& what, long long needed_columns)
        : NumericError(what), needed_columns(needed_columns) {}
    long long needed_columns;
};

/// Simulated state magnitude exceeded the overflow guard.
class InstabilityOverflowError : public NumericError {
  public:
    InstabilityOverflowError(const std::string& what, long long time_index)
        : NumericError(what), time_index(time_index) {}
    long long time_index;
};

/// Operation requires a strictly stable system (rho(A) < 1).
class InstabilityError : public NumericError {
  public:
    using NumericError::NumericError;
};

/// Spectral radius is zero within tolerance; rescaling undefined.
class CannotRescaleError : public NumericError {
  public:
    using NumericError::NumericError;
};

/// An iteration or series failed to converge within its budget.
class ConvergenceError : public NumericError {
  public:
    using NumericError::NumericError;
};

}  // namespace sysid
