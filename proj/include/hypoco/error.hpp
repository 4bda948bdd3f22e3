#pragma once

#include <stdexcept>
#include <string>

namespace hypoco {

/// Failure classes, mapped one-to-one onto the CLI exit codes.
enum class ErrorKind {
  invariant = 1,  // a checked identity or inequality does not hold
  config = 2,     // bad input, unknown key, invalid parameter
  numerical = 3,  // singular, unconverged or underresolved computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& module, const std::string& what)
      : std::runtime_error(module + ": " + what), kind_(kind), module_(module) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& module() const noexcept { return module_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
  std::string module_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& module, const std::string& what) {
  throw Error(kind, module, what);
}

}  // namespace hypoco
