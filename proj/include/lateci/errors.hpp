#pragma once

#include <stdexcept>
#include <string>

namespace lateci {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags, bad parameters, violated preconditions on configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input files. Messages name the offending row and column.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// The data cannot support the requested statistic (zero moments,
// vanishing denominators, degenerate training folds).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class DegenerateFoldError : public DegenerateDataError {
 public:
  using DegenerateDataError::DegenerateDataError;
};

class WeakDenominatorError : public DegenerateDataError {
 public:
  using DegenerateDataError::DegenerateDataError;
};

class PositivityError : public DegenerateDataError {
 public:
  using DegenerateDataError::DegenerateDataError;
};

}  // namespace lateci
