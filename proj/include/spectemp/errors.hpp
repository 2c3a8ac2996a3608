#pragma once

#include <stdexcept>
#include <string>

namespace spectemp {

// Error taxonomy shared by every module. The CLI maps each class to a
// distinct exit code, so keep the hierarchy flat and the classes few.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid options, out-of-range parameters, impossible requests (k > d, ...).
class config_error : public error {
 public:
  using error::error;
};

// Malformed containers and text inputs: bad magic, version mismatch,
// truncated payloads, unparseable lines, corrupted model fields.
class format_error : public error {
 public:
  using error::error;
};

// Well-formed input whose content violates a data invariant: non-finite
// values, duplicate judgment pairs, too few rows to estimate from.
class data_error : public error {
 public:
  using error::error;
};

// Numerical failure inside a solver (non-convergence, PSD violation).
class numerical_error : public error {
 public:
  using error::error;
};

// Incompatible dimensions between operands.
class shape_error : public error {
 public:
  using error::error;
};

// Filesystem failures: missing files, unwritable paths, short writes.
class io_error : public error {
 public:
  using error::error;
};

}  // namespace spectemp
