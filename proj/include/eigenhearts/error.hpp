#pragma once

#include <stdexcept>
#include <string>

namespace eigenhearts {

enum class ErrorKind {
  Path,           // missing file or directory
  Format,         // malformed file or shape mismatch
  Decode,         // unreadable image
  Capacity,       // not enough samples/frames, empty inputs
  Numeric,        // non-finite values
  Decomposition,  // eigen/SVD solver failure
  Bounds,         // index or rank out of range
  Config,         // invalid configuration
  Roster,         // unknown class label
  Io,             // read/write failure, truncated file
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

/// Process exit code for an error kind: 2 config, 3 data, 4 numeric.
int exit_code(ErrorKind kind);

}  // namespace eigenhearts
