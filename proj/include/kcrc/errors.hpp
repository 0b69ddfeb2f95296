#pragma once

#include <stdexcept>
#include <string>

namespace kcrc {

// Root of the library's exception hierarchy. Two families exist: data errors
// (bad input files, bad arguments) and numerical failures. The CLI maps them
// to exit codes 1 and 2 respectively.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class RankError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class GraphError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace kcrc
