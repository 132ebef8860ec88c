#pragma once

#include <stdexcept>
#include <string>

namespace nlmc {

/// Raised when a solver or combinatorial construction would exceed its configured atom cap.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Raised when a computation leaves its numerically valid regime (negative radicand,
/// grid mass leakage, infeasible transport, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nlmc
