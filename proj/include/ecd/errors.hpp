#pragma once

#include <stdexcept>
#include <string>

namespace ecd {

// Invalid or inconsistent input data (empty pools, malformed structures, ...).
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values encountered where finite numbers are required.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A stochastic generation step could not complete (rejection cap, empty support).
struct generation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed text input; carries the 1-based line number when known.
struct parse_error : std::runtime_error {
  int line = 0;
  parse_error(const std::string& what, int line_no)
      : std::runtime_error(what + " (line " + std::to_string(line_no) + ")"),
        line(line_no) {}
  explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ecd
