#pragma once

#include <stdexcept>
#include <string>

namespace soc {

/// Bad input: malformed files, out-of-range parameters, unknown labels. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation left its domain (degenerate state, failed initialization). CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace soc
