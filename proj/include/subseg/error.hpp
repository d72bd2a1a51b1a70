#pragma once

#include <stdexcept>
#include <string>

namespace subseg {

enum class ErrorKind {
  InvalidInput,
  DecompositionFailure,
  DegenerateInput,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::DecompositionFailure: return "decomposition failure";
    case ErrorKind::DegenerateInput: return "degenerate input";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

/// Library-wide exception. The kind decides the CLI exit code.
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

}  // namespace subseg
