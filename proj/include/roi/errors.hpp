#pragma once

#include <stdexcept>
#include <string>

namespace roi {

// Error categories map onto process exit codes: usage errors exit 1,
// data/io errors exit 2, backend errors exit 3.
enum class ErrorKind {
  usage,
  data,
  io,
  backend,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  int exit_code() const noexcept {
    switch (kind_) {
      case ErrorKind::usage:
        return 1;
      case ErrorKind::data:
      case ErrorKind::io:
        return 2;
      case ErrorKind::backend:
        return 3;
    }
    return 2;
  }

 private:
  ErrorKind kind_;
};

}  // namespace roi
