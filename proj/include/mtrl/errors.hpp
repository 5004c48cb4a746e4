#pragma once

#include <stdexcept>
#include <string>

namespace mtrl {

// Bad shapes, out-of-range parameters, malformed input files.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Loss of positive definiteness, non-convergence, corrupted state.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ground-truth instance with a vanishing column or singular value.
class DegenerateInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mtrl
