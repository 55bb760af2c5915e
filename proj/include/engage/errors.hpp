#pragma once

#include <stdexcept>
#include <string>

namespace engage {

// Malformed input: shape mismatch, bad label, unreadable or inconsistent
// file. The CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace engage
