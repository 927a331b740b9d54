#pragma once

#include <stdexcept>
#include <string>

namespace fairpost {

// Base class for all errors raised by the library.  The CLI maps each
// category to a fixed exit code (usage 1, data 2, solver/geometry 3).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed arguments: non-finite numbers, dimension mismatches, bad options.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Problems with the data itself: empty groups, missing labels, unknown group
// tokens, unparsable CSV rows.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical solver did not converge or exceeded its iteration budget.
class SolverError : public Error {
 public:
  using Error::Error;
};

// The boundary polytope of a coupling has no center point; indicates a
// non-optimal or corrupted coupling.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Model documents that fail validation or carry an unsupported version.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairpost
