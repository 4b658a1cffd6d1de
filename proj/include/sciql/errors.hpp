#pragma once

#include <stdexcept>
#include <string>

namespace sciql {

// Shape mismatches and out-of-range arguments use std::invalid_argument.

/// Operation requested on an object in the wrong lifecycle state
/// (stepping a finished episode, advantages from untrained heads).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or truncated file. The message names the offending field.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or exploding losses during optimization.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sciql
