#pragma once

#include <stdexcept>
#include <string>

namespace simid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// q(x) == 0 where p(x) > 0
class AbsoluteContinuityViolation : public Error {
 public:
  using Error::Error;
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

class BadTolerance : public Error {
 public:
  using Error::Error;
};

// Thrown when an enumeration or grid would exceed its configured work budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

class TriangleViolation : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace simid
