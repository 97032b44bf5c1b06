#include "rvf/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "rvf/error.hpp"

namespace rvf {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(std::string_view v) {
  v = trim(v);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
    return std::string(v.substr(1, v.size() - 2));
  return std::string(v);
}

/// Removes a trailing comment that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

double as_double(const std::string &key, std::string_view v) {
  const auto s = unquote(v);
  double out = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) throw InputError("config: '" + key + "' expects a number, got '" + s + "'");
  return out;
}

std::int64_t as_int(const std::string &key, std::string_view v) {
  const auto s = unquote(v);
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size())
    throw InputError("config: '" + key + "' expects an integer, got '" + s + "'");
  return out;
}

std::size_t as_count(const std::string &key, std::string_view v) {
  const auto n = as_int(key, v);
  if (n < 0) throw InputError("config: '" + key + "' must not be negative");
  return static_cast<std::size_t>(n);
}

bool as_bool(const std::string &key, std::string_view v) {
  const auto s = unquote(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InputError("config: '" + key + "' expects a boolean, got '" + s + "'");
}

std::vector<std::string> as_list(const std::string &key, std::string_view v) {
  v = trim(v);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') throw InputError("config: '" + key + "' expects an array");
  std::vector<std::string> out;
  std::string_view body = trim(v.substr(1, v.size() - 2));
  while (!body.empty()) {
    const auto comma = body.find(',');
    const auto item = trim(body.substr(0, comma));
    if (!item.empty()) out.push_back(unquote(item));
    if (comma == std::string_view::npos) break;
    body = body.substr(comma + 1);
  }
  return out;
}

std::vector<double> as_doubles(const std::string &key, std::string_view v) {
  std::vector<double> out;
  for (const auto &item : as_list(key, v)) out.push_back(as_double(key, item));
  return out;
}

std::filesystem::path as_path(std::string_view v, const std::filesystem::path &base) {
  std::filesystem::path p = unquote(v);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

using Setter = std::function<void(RunConfig &, const std::string &, std::string_view, const std::filesystem::path &)>;

const std::map<std::string, Setter> &setters() {
  static const std::map<std::string, Setter> table = {
      {"panel", [](auto &c, auto &, auto v, auto &b) { c.panel = as_path(v, b); }},
      {"crosswalk", [](auto &c, auto &, auto v, auto &b) { c.crosswalk = as_path(v, b); }},
      {"partitions", [](auto &c, auto &, auto v, auto &b) { c.partitions = as_path(v, b); }},
      {"membership", [](auto &c, auto &, auto v, auto &b) { c.membership = as_path(v, b); }},
      {"out", [](auto &c, auto &, auto v, auto &b) { c.out = as_path(v, b); }},
      {"reference_year", [](auto &c, auto &k, auto v, auto &) { c.reference_year = static_cast<int>(as_int(k, v)); }},
      {"window",
       [](auto &c, auto &, auto v, auto &) {
         const auto [a, b] = parse_window(unquote(v));
         c.window_start = a;
         c.window_end = b;
       }},
      {"window_start", [](auto &c, auto &k, auto v, auto &) { c.window_start = static_cast<int>(as_int(k, v)); }},
      {"window_end", [](auto &c, auto &k, auto v, auto &) { c.window_end = static_cast<int>(as_int(k, v)); }},
      {"grid",
       [](auto &c, auto &, auto v, auto &) {
         const auto [nx, ny] = parse_grid(unquote(v));
         c.grid_nx = nx;
         c.grid_ny = ny;
       }},
      {"h", [](auto &c, auto &k, auto v, auto &) { c.h = as_double(k, v); }},
      {"alpha", [](auto &c, auto &k, auto v, auto &) { c.alpha = as_double(k, v); }},
      {"tune", [](auto &c, auto &k, auto v, auto &) { c.tune = as_bool(k, v); }},
      {"tune_h", [](auto &c, auto &k, auto v, auto &) { c.tune_h = as_doubles(k, v); }},
      {"tune_alpha", [](auto &c, auto &k, auto v, auto &) { c.tune_alpha = as_doubles(k, v); }},
      {"holdout", [](auto &c, auto &k, auto v, auto &) { c.holdout = as_double(k, v); }},
      {"B", [](auto &c, auto &k, auto v, auto &) { c.replicates = as_count(k, v); }},
      {"replicates", [](auto &c, auto &k, auto v, auto &) { c.replicates = as_count(k, v); }},
      {"seed", [](auto &c, auto &k, auto v, auto &) { c.seed = static_cast<std::uint64_t>(as_count(k, v)); }},
      {"step", [](auto &c, auto &k, auto v, auto &) { c.step = as_double(k, v); }},
      {"significance_level", [](auto &c, auto &k, auto v, auto &) { c.significance_level = as_double(k, v); }},
      {"permutations", [](auto &c, auto &k, auto v, auto &) { c.permutations = as_count(k, v); }},
      {"curve_replicates", [](auto &c, auto &k, auto v, auto &) { c.curve_replicates = as_count(k, v); }},
      {"long_horizon", [](auto &c, auto &k, auto v, auto &) { c.long_horizon = as_double(k, v); }},
      {"merge_radius", [](auto &c, auto &k, auto v, auto &) { c.merge_radius = as_double(k, v); }},
      {"min_share", [](auto &c, auto &k, auto v, auto &) { c.min_share = as_double(k, v); }},
      {"min_radius", [](auto &c, auto &k, auto v, auto &) { c.min_radius = as_double(k, v); }},
      {"assign_factor", [](auto &c, auto &k, auto v, auto &) { c.assign_factor = as_double(k, v); }},
      {"labels", [](auto &c, auto &k, auto v, auto &) { c.labels = as_list(k, v); }},
      {"trajectory_every", [](auto &c, auto &k, auto v, auto &) { c.trajectory_every = as_count(k, v); }},
      {"switch_year", [](auto &c, auto &k, auto v, auto &) { c.switch_year = static_cast<int>(as_int(k, v)); }},
  };
  return table;
}

}  // namespace

std::pair<int, int> parse_window(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw InputError("window must look like Y1:Y2");
  const auto a = as_int("window", text.substr(0, colon));
  const auto b = as_int("window", text.substr(colon + 1));
  if (a >= b) throw InputError("window start must precede its end");
  return {static_cast<int>(a), static_cast<int>(b)};
}

std::pair<std::size_t, std::size_t> parse_grid(std::string_view text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string_view::npos) throw InputError("grid must look like NxM");
  const auto nx = as_count("grid", text.substr(0, x));
  const auto ny = as_count("grid", text.substr(x + 1));
  if (nx < 2 || ny < 2) throw InputError("grid needs at least 2 nodes per axis");
  return {nx, ny};
}

void apply_setting(RunConfig &config, const std::string &key, const std::string &value,
                   const std::filesystem::path &base_dir) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw InputError("config: unknown key '" + key + "'");
  it->second(config, key, value, base_dir);
}

RunConfig parse_config(std::string_view text, const std::filesystem::path &base_dir) {
  RunConfig config;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(strip_comment(raw));
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    apply_setting(config, key, std::string(trim(line.substr(eq + 1))), base_dir);
  }
  return config;
}

RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

void RunConfig::validate(bool needs_params) const {
  const auto need = [](const std::filesystem::path &p, const char *what) {
    if (p.empty()) throw InputError(std::string("config: '") + what + "' is required");
    if (!std::filesystem::is_regular_file(p)) throw InputError(std::string(what) + " file not found: " + p.string());
  };
  need(panel, "panel");
  need(partitions, "partitions");
  if (!crosswalk.empty()) need(crosswalk, "crosswalk");
  if (membership) need(*membership, "membership");
  if (window_start && window_end && *window_start >= *window_end)
    throw InputError("window start must precede its end");
  if (grid_nx < 2 || grid_ny < 2) throw InputError("grid needs at least 2 nodes per axis");
  if (step <= 0.0) throw InputError("step must be positive");
  if (!(significance_level > 0.0 && significance_level < 1.0)) throw InputError("significance_level must lie in (0, 1)");
  if (!needs_params) return;
  if (tune) return;
  if (!h || !alpha) throw InputError("either h and alpha or tune = true must be given");
  if (!(*h > 0.0)) throw InputError("h must be positive");
  if (!(*alpha >= 0.0 && *alpha < 1.0)) throw InputError("alpha must lie in [0, 1)");
}

}  // namespace rvf
