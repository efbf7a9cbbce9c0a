#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace probe_latency {

enum class ErrorKind {
  kConfig,
  kIo,
  kSchema,
  kIngest,
  kCoverage,
  kExcludedWindow,
  kNoTransition,
  kPhaseTooShort,
  kEmptyReport,
};

std::string_view to_string(ErrorKind kind);

/// Error raised by the library. Carries a kind and, for file-backed failures,
/// the offending file and 1-based line (0 when not line-specific).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, std::string file = {},
        int line = 0);

  ErrorKind kind() const { return kind_; }
  const std::string& file() const { return file_; }
  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::string file_;
  int line_;
};

}  // namespace probe_latency
