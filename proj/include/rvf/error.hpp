#pragma once

#include <stdexcept>
#include <string>

namespace rvf {

/// Malformed or inconsistent input data (CSV content, crosswalk, partitions).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation's precondition does not hold for otherwise well-formed data
/// (singular covariance, empty window, all-empty field, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rvf
