#pragma once

#include <stdexcept>
#include <string>

namespace sgasmix {

// Bad user-supplied input (files, CLI arguments, parameter domains).
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical degeneracy that survived the retry policy.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Root search found no sign change on the admissible bracket.
struct bracket_error : numerical_error {
  using numerical_error::numerical_error;
};

}  // namespace sgasmix
