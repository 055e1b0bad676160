#pragma once

#include <stdexcept>
#include <string>

namespace wgc {

// Malformed input data or a violated data invariant (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operands whose shapes do not agree.
class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

// Argument outside the documented domain of an operation.
class DomainError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace wgc
