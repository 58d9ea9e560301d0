#pragma once

#include <stdexcept>
#include <string>

namespace chasekit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnboundVariable : Error { using Error::Error; };
struct ArityMismatch : Error { using Error::Error; };
struct NotASubcontext : Error { using Error::Error; };
struct NotRegular : Error { using Error::Error; };
struct NotHorn : Error { using Error::Error; };
struct NotRelational : Error { using Error::Error; };
struct NotFunctional : Error { using Error::Error; };
struct NotAnEStructure : Error { using Error::Error; };
struct PreconditionViolation : Error { using Error::Error; };
struct NotSatisfied : Error { using Error::Error; };
struct NotSatisfiedAtAnyLevel : Error { using Error::Error; };
struct TraceExhausted : Error { using Error::Error; };
struct ConstantInTheory : Error { using Error::Error; };
struct IllFormedDerivation : Error { using Error::Error; };
struct CheckFailed : Error { using Error::Error; };

// Parse diagnostics carry file/line/column so the CLI can report them verbatim.
struct ParseError : Error {
  std::string file;
  int line, col;
  ParseError(std::string file_, int line_, int col_, const std::string& msg)
      : Error(file_ + ":" + std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg),
        file(std::move(file_)), line(line_), col(col_) {}
};

}  // namespace chasekit
