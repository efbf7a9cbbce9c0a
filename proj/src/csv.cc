#include "probe_latency/csv.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "probe_latency/error.h"

namespace probe_latency::csv {
namespace {

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    auto end = line.find(sep, begin);
    auto piece = line.substr(begin, end == std::string_view::npos
                                        ? std::string_view::npos
                                        : end - begin);
    out.emplace_back(strip(piece));
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  return out;
}

Reader::Reader(const std::filesystem::path& path,
               std::vector<std::string> columns,
               std::vector<std::string> optional_columns, bool require_schema)
    : path_(path.string()), in_(path) {
  if (!in_) {
    throw Error(ErrorKind::kIo, "cannot open file", path_);
  }
  bool saw_schema = false;
  while (std::getline(in_, buffer_)) {
    ++line_;
    auto text = strip(buffer_);
    if (text.empty()) continue;
    if (text.front() == '#') {
      constexpr std::string_view kKey = "# schema_version=";
      if (text.starts_with(kKey)) {
        auto version = text.substr(kKey.size());
        if (version != std::to_string(kSchemaVersion)) {
          fail("unsupported schema version " + std::string(version));
        }
        saw_schema = true;
      }
      continue;
    }
    header_ = split(text);
    break;
  }
  if (header_.empty()) {
    throw Error(ErrorKind::kSchema, "missing header row", path_, line_);
  }
  if (require_schema && !saw_schema) {
    fail("missing '# schema_version' header");
  }
  std::vector<std::string> full = columns;
  full.insert(full.end(), optional_columns.begin(), optional_columns.end());
  bool ok = header_.size() >= columns.size() && header_.size() <= full.size() &&
            std::equal(header_.begin(), header_.end(), full.begin());
  if (!ok) {
    std::string expected;
    for (const auto& c : full) expected += (expected.empty() ? "" : ",") + c;
    std::string got;
    for (const auto& c : header_) got += (got.empty() ? "" : ",") + c;
    fail("header mismatch: expected '" + expected + "', got '" + got + "'");
  }
}

bool Reader::next() {
  while (std::getline(in_, buffer_)) {
    ++line_;
    auto text = strip(buffer_);
    if (text.empty() || text.front() == '#') continue;
    row_ = split(text);
    if (row_.size() != header_.size()) {
      fail(fmt::format("expected {} fields, got {}", header_.size(),
                       row_.size()));
    }
    return true;
  }
  return false;
}

bool Reader::has_column(std::string_view column) const {
  return std::find(header_.begin(), header_.end(), column) != header_.end();
}

std::string_view Reader::field(std::string_view column) const {
  auto it = std::find(header_.begin(), header_.end(), column);
  if (it == header_.end()) return {};
  return row_[static_cast<std::size_t>(it - header_.begin())];
}

double Reader::number(std::string_view column) const {
  auto text = field(column);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    fail(fmt::format("column '{}': not a number: '{}'", column, text));
  }
  return value;
}

long long Reader::integer(std::string_view column) const {
  auto text = field(column);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(fmt::format("column '{}': not an integer: '{}'", column, text));
  }
  return value;
}

void Reader::fail(const std::string& message) const {
  throw Error(ErrorKind::kSchema, message, path_, line_);
}

std::ofstream open_writer(const std::filesystem::path& path,
                          const std::vector<std::string>& columns) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write file", path.string());
  out << kSchemaHeader << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out << (i ? "," : "") << columns[i];
  }
  out << '\n';
  return out;
}

std::string exact(double v) { return fmt::format("{}", v); }

std::string fixed(double v, int digits) {
  // Avoid "-0.0000" from tiny negative rounding noise.
  double scale = std::pow(10.0, digits);
  if (std::round(v * scale) == 0.0) v = 0.0;
  return fmt::format("{:.{}f}", v, digits);
}

std::string fixed(std::optional<double> v, int digits) {
  return v ? fixed(*v, digits) : std::string{};
}

}  // namespace probe_latency::csv
