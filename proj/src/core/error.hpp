#pragma once

#include <stdexcept>
#include <string>

namespace xcb {

// Error categories; the numeric values double as CLI exit codes and
// C-API status codes.
enum class ErrorKind : int {
  usage = 1,    // bad arguments / configuration
  io = 2,       // file and format problems
  numeric = 3,  // NaN inputs, dimension mismatches, solver failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) {
  throw Error(ErrorKind::usage, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorKind::io, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorKind::numeric, msg);
}

}  // namespace xcb
