#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bt {

using NodeId = std::int32_t;
using NodeSet = std::vector<NodeId>;  // kept sorted ascending

// Selects between the OpenMP kernels and their serial reference versions.
// Both paths must return identical results.
enum class Execution { serial, parallel };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Precondition violated by a caller-supplied argument.
class DomainError : public Error {
 public:
  using Error::Error;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

// Exact search refused because the input exceeds the enumeration cap.
class CapError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, int exponent) : Error(what), exponent_(exponent) {}
  int exponent() const { return exponent_; }

 private:
  int exponent_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace bt
