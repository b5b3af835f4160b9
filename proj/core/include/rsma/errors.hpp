#pragma once

#include <stdexcept>
#include <string>

namespace rsma {

/// Bad input: wrong dimensions, out-of-range config values, malformed files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced non-finite values or a solve broke down.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rsma
