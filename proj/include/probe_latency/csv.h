#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace probe_latency::csv {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kSchemaHeader = "# schema_version=1";

/// Line-oriented reader for the comma-separated formats used by the tool.
/// Fields are not quoted. Blank lines and `#` comment lines are skipped; a
/// `# schema_version=N` line must name the supported version. The first
/// non-comment line is the header: `columns`, then any prefix of
/// `optional_columns`.
class Reader {
 public:
  Reader(const std::filesystem::path& path, std::vector<std::string> columns,
         std::vector<std::string> optional_columns = {},
         bool require_schema = false);

  /// Advances to the next data row. Returns false at end of file.
  bool next();

  /// Field by column name; empty string when an optional column is absent.
  std::string_view field(std::string_view column) const;
  bool has_column(std::string_view column) const;

  double number(std::string_view column) const;
  long long integer(std::string_view column) const;

  int line() const { return line_; }
  const std::string& path() const { return path_; }

  /// Raises a schema error pointing at the current line.
  [[noreturn]] void fail(const std::string& message) const;

 private:
  std::string path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::vector<std::string> row_;
  std::string buffer_;
  int line_ = 0;
};

std::vector<std::string> split(std::string_view line, char sep = ',');

/// Opens `path` for writing and emits the schema header plus column names.
std::ofstream open_writer(const std::filesystem::path& path,
                          const std::vector<std::string>& columns);

/// Shortest round-trip representation of `v`.
std::string exact(double v);
/// Fixed-point with `digits` decimals.
std::string fixed(double v, int digits = 4);
/// Empty field for nullopt.
std::string fixed(std::optional<double> v, int digits = 4);

}  // namespace probe_latency::csv
