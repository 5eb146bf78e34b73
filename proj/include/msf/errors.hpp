#pragma once

#include <stdexcept>

namespace msf {

// Failure taxonomy mirrored by the CLI exit codes: io_error -> 1,
// parse_error / validation_error -> 2, numeric_error -> 3.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally bad input: unreadable JSON/CSV, missing fields, ragged rows.
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Well-formed input with out-of-contract values.
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss, singular solve, or any arithmetic breakdown.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace msf
