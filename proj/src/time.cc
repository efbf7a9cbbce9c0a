#include "probe_latency/time.h"

#include <charconv>
#include <stdexcept>

#include <fmt/format.h>

namespace probe_latency {
namespace {

using namespace std::chrono;

int read_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) {
    throw std::invalid_argument("truncated timestamp");
  }
  int value = 0;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + count, value);
  if (ec != std::errc{} || ptr != first + count) {
    throw std::invalid_argument("non-numeric timestamp field");
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, std::string_view allowed) {
  if (pos >= text.size() || allowed.find(text[pos]) == std::string_view::npos) {
    throw std::invalid_argument("malformed timestamp");
  }
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  try {
    int y = read_digits(text, 0, 4);
    expect(text, 4, "-");
    int mo = read_digits(text, 5, 2);
    expect(text, 7, "-");
    int d = read_digits(text, 8, 2);
    expect(text, 10, "T ");
    int h = read_digits(text, 11, 2);
    expect(text, 13, ":");
    int mi = read_digits(text, 14, 2);
    int s = 0;
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
      s = read_digits(text, 17, 2);
      pos = 19;
    }
    if (pos < text.size() && text[pos] == 'Z') ++pos;
    if (pos != text.size()) throw std::invalid_argument("trailing characters");

    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                       day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
      throw std::invalid_argument("field out of range");
    }
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("invalid timestamp '" + std::string(text) +
                                "': " + e.what());
  }
}

Minute parse_minute(std::string_view text) {
  return floor_minute(parse_timestamp(text));
}

std::string format_timestamp(Timestamp t) {
  auto day_point = floor<days>(t);
  year_month_day ymd{day_point};
  hh_mm_ss hms{t - day_point};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z",
                     static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()), hms.hours().count(),
                     hms.minutes().count(), hms.seconds().count());
}

std::string format_minute(Minute m) {
  return format_timestamp(time_point_cast<seconds>(m));
}

std::string format_minute_compact(Minute m) {
  auto day_point = floor<days>(m);
  year_month_day ymd{day_point};
  hh_mm_ss hms{m - day_point};
  return fmt::format("{:04d}{:02d}{:02d}T{:02d}{:02d}",
                     static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()), hms.hours().count(),
                     hms.minutes().count());
}

}  // namespace probe_latency
