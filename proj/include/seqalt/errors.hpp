#pragma once

#include <stdexcept>
#include <string>

namespace seqalt {

// Root of every exception thrown by the library. The CLI maps the leaf
// categories onto exit codes (validation 2, numerical 3, IO 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: out-of-domain arguments, malformed records, schema problems.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// The campaign already consumed every scheduled run.
class CampaignCompleteError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Numerical failures: quadrature, estimation, sampling, singular designs.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SamplerError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class CriterionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class PlanningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace seqalt
