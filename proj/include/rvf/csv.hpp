#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rvf::csv {

/// A parsed CSV table whose header matched an expected column list.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row, for error messages.
  std::vector<std::size_t> lines;
};

/// Reads a comma-separated file. The header must contain every column in
/// `required` (extra columns are allowed); rows are reordered so that
/// column i corresponds to required[i]. Throws InputError.
Table read(const std::filesystem::path &path, const std::vector<std::string> &required);
Table parse(std::istream &in, const std::vector<std::string> &required, std::string_view source);

std::int64_t to_int(std::string_view field, std::string_view what, std::size_t line);
double to_double(std::string_view field, std::string_view what, std::size_t line);

/// Shortest representation that round-trips to the same double.
std::string format(double v);
/// Fixed number of significant digits (used for SVG).
std::string format_sig(double v, int digits = 6);

/// Writes a row of already-formatted fields, quoting where needed.
void write_row(std::ostream &out, const std::vector<std::string> &fields);

}  // namespace rvf::csv
