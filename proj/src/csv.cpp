#include "rvf/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "rvf/error.hpp"

namespace rvf::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

}  // namespace

Table parse(std::istream &in, const std::vector<std::string> &required, std::string_view source) {
  Table table;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    header = split_line(line);
    break;
  }
  if (header.empty()) throw InputError(std::string(source) + ": empty file");

  std::vector<std::size_t> index;
  for (const auto &col : required) {
    std::size_t found = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == col) found = i;
    if (found == header.size())
      throw InputError(std::string(source) + ": missing column '" + col + "'");
    index.push_back(found);
  }
  table.header = required;

  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != header.size())
      throw InputError(std::string(source) + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    std::vector<std::string> row;
    row.reserve(index.size());
    for (auto i : index) row.push_back(std::move(fields[i]));
    table.rows.push_back(std::move(row));
    table.lines.push_back(lineno);
  }
  return table;
}

Table read(const std::filesystem::path &path, const std::vector<std::string> &required) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse(in, required, path.string());
}

std::int64_t to_int(std::string_view field, std::string_view what, std::size_t line) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
    throw InputError("line " + std::to_string(line) + ": invalid integer for " + std::string(what) +
                     ": '" + std::string(field) + "'");
  return v;
}

double to_double(std::string_view field, std::string_view what, std::size_t line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
    throw InputError("line " + std::to_string(line) + ": invalid number for " + std::string(what) +
                     ": '" + std::string(field) + "'");
  return v;
}

std::string format(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string format_sig(double v, int digits) {
  if (v == 0.0) return "0";  // avoids "-0"
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.*g", digits, v);
  return buf.data();
}

void write_row(std::ostream &out, const std::vector<std::string> &fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const auto &f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out << '"';
      for (char c : f) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

}  // namespace rvf::csv
