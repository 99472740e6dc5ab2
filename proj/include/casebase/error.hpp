#pragma once

#include <stdexcept>
#include <string>

namespace casebase {

enum class ErrorKind {
  invalid_argument,  // bad option, malformed spec string
  data,              // malformed or inconsistent input data
  numerical,         // separation, divergence, singular systems
  io,                // unreadable / unwritable files
  version,           // model file format mismatch
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace casebase
