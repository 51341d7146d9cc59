#pragma once

#include <stdexcept>
#include <string>

namespace vfn {

enum class ErrorCode {
  internal = 1,
  invalid_argument = 2,
  shape_mismatch = 3,
  parse_error = 4,
  io_error = 5,
  degenerate_frame = 6,
  numeric = 7,
};

/// Library-wide exception; the C boundary translates code() into an int.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace vfn
