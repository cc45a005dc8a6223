#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpcal {

// Bad caller input: wrong sizes, non-finite values, out-of-range options.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Geometry where a quantity is undefined (coincident points, collinear sets).
class DegenerateGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A linear system could not be solved even with regularization.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, int iteration = -1)
      : std::runtime_error(iteration >= 0 ? what + " (iteration " + std::to_string(iteration) + ")"
                                          : what),
        iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

// Observability index undefined for the given singular values.
class SingularIndex : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnreachableTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RegionInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed data row; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mpcal
