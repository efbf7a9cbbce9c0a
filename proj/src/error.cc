#include "probe_latency/error.h"

#include <utility>

namespace probe_latency {
namespace {

std::string compose(ErrorKind kind, const std::string& message,
                    const std::string& file, int line) {
  std::string out(to_string(kind));
  out += ": ";
  if (!file.empty()) {
    out += file;
    if (line > 0) out += ":" + std::to_string(line);
    out += ": ";
  }
  out += message;
  return out;
}

}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kSchema: return "schema";
    case ErrorKind::kIngest: return "ingest";
    case ErrorKind::kCoverage: return "coverage";
    case ErrorKind::kExcludedWindow: return "excluded_window";
    case ErrorKind::kNoTransition: return "no_transition";
    case ErrorKind::kPhaseTooShort: return "phase_too_short";
    case ErrorKind::kEmptyReport: return "empty_report";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string message, std::string file, int line)
    : std::runtime_error(compose(kind, message, file, line)),
      kind_(kind),
      message_(std::move(message)),
      file_(std::move(file)),
      line_(line) {}

}  // namespace probe_latency
