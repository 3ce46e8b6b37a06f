#pragma once

#include <stdexcept>
#include <string>

namespace orbctl {

/// Broad failure categories. The CLI maps these onto exit codes:
/// input-side problems exit with 2, numerical/synthesis failures with 1.
enum class ErrorKind {
  Dimension,
  Input,
  Parse,
  Validation,
  Io,
  Singular,
  NoUniqueSolution,
  Range,
  Numerical,
  Synthesis,
  DegenerateGeometry,
  InfeasibleTransfer,
  NotApplicable,
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

}  // namespace orbctl
