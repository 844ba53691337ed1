#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace conetree {

// Structurally invalid input: non-square matrices, malformed config blocks,
// distributions that do not normalize, and similar.
class MalformedInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A valid call whose arguments violate an operation's stated preconditions
// (e.g. a matrix failing its axioms where a validated one is required).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Too few samples (or similar) for the requested statistical guarantee.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation left the numerical domain it must stay in, e.g. an iterate
// whose imaginary part collapsed to the real axis or a non-finite value.
class NumericalDomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Work would exceed a configured resource cap. `projected` is the size the
// operation would have needed, `cap` the configured limit.
class ResourceLimitError : public std::runtime_error {
 public:
  ResourceLimitError(std::string msg, std::uint64_t projected, std::uint64_t cap)
      : std::runtime_error(std::move(msg)), projected(projected), cap(cap) {}

  std::uint64_t projected = 0;
  std::uint64_t cap = 0;
};

// An iteration failed to meet its tolerance within the iteration budget.
// Carries the last iterate so callers can inspect how close it got.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(std::string msg, std::complex<double> z,
                   std::vector<std::complex<double>> last, double residual,
                   std::int64_t iterations)
      : std::runtime_error(std::move(msg)),
        z(z),
        last_iterate(std::move(last)),
        residual(residual),
        iterations(iterations) {}

  std::complex<double> z;
  std::vector<std::complex<double>> last_iterate;
  double residual = 0.0;
  std::int64_t iterations = 0;
};

// Config-file syntax error with a source position for diagnostics.
class ConfigParseError : public std::runtime_error {
 public:
  ConfigParseError(std::string msg, int line, int column)
      : std::runtime_error(std::move(msg)), line(line), column(column) {}

  int line = 0;
  int column = 0;
};

}  // namespace conetree
