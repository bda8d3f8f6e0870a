#include "eigenhearts/error.hpp"

namespace eigenhearts {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Path: return "path error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Decode: return "decode error";
    case ErrorKind::Capacity: return "capacity error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Decomposition: return "decomposition error";
    case ErrorKind::Bounds: return "bounds error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Roster: return "roster error";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Bounds:
      return 2;
    case ErrorKind::Numeric:
    case ErrorKind::Decomposition:
      return 4;
    default:
      return 3;
  }
}

}  // namespace eigenhearts
