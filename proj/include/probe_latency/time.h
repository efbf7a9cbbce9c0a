#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace probe_latency {

using Timestamp = std::chrono::sys_seconds;
using Minute = std::chrono::sys_time<std::chrono::minutes>;

/// Parses `YYYY-MM-DDTHH:MM:SS` with an optional trailing `Z`. A space is
/// accepted in place of `T`, and seconds may be omitted. Throws
/// std::invalid_argument on anything else.
Timestamp parse_timestamp(std::string_view text);
Minute parse_minute(std::string_view text);

std::string format_timestamp(Timestamp t);
std::string format_minute(Minute m);
/// Compact form for file names: `YYYYMMDDTHHMM`.
std::string format_minute_compact(Minute m);

inline Minute floor_minute(Timestamp t) {
  return std::chrono::floor<std::chrono::minutes>(t);
}

/// Closed range of whole minutes [first, last].
struct MinuteRange {
  Minute first;
  Minute last;

  int length() const { return static_cast<int>((last - first).count()) + 1; }
  bool contains(Minute m) const { return m >= first && m <= last; }
  bool empty() const { return last < first; }
};

}  // namespace probe_latency
