#pragma once

#include <stdexcept>
#include <string>

namespace bavamio {

// Bad input data or configuration (file problems, invalid cells, dimension
// mismatches). Maps to CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Solver left its admissible region (e.g. sigma^2 blow-up). Maps to CLI
// exit code 4.
class SolverDivergence : public std::runtime_error {
 public:
  explicit SolverDivergence(const std::string& msg) : std::runtime_error(msg) {}
};

// A guaranteed invariant was violated (e.g. the majorize-minimize objective
// increased). Indicates a bug, not bad input.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace bavamio
