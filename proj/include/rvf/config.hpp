#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rvf {

/// Everything a command needs to run. Relative paths in a config file are
/// resolved against the file's directory.
struct RunConfig {
  std::filesystem::path panel;
  std::filesystem::path crosswalk;
  std::filesystem::path partitions;
  std::optional<std::filesystem::path> membership;
  int reference_year = 0;

  /// Whole panel when unset.
  std::optional<int> window_start;
  std::optional<int> window_end;

  std::size_t grid_nx = 50;
  std::size_t grid_ny = 50;

  std::optional<double> h;
  std::optional<double> alpha;
  bool tune = false;
  std::vector<double> tune_h;
  std::vector<double> tune_alpha;
  double holdout = 0.0;

  std::size_t replicates = 500;
  std::uint64_t seed = 1;
  double step = 0.1;
  double significance_level = 0.05;

  std::size_t permutations = 999;
  std::size_t curve_replicates = 500;

  double long_horizon = 500.0;
  double merge_radius = 0.5;
  double min_share = 0.01;
  double min_radius = 0.25;
  double assign_factor = 1.5;
  std::vector<std::string> labels;
  /// Keep every k-th integration step in the trajectory CSV.
  std::size_t trajectory_every = 10;

  /// First year of the new partition for diag-partition-switch; detected
  /// from the partitions when unset.
  std::optional<int> switch_year;

  std::filesystem::path out = "out";

  /// Throws InputError when an input file is missing, the window is
  /// reversed, or neither (h, alpha) nor tuning grids are available.
  /// `needs_params` is false for commands that do not estimate a field.
  void validate(bool needs_params) const;
};

/// Flat key/value document in TOML syntax: `key = value` lines, `#`
/// comments, quoted strings, numbers, booleans and one-line arrays.
/// `[section]` headers are accepted and ignored. Unknown keys are errors.
RunConfig parse_config(std::string_view text, const std::filesystem::path &base_dir = {});
RunConfig load_config(const std::filesystem::path &path);

/// Applies one override given as (key, value) in config-file syntax.
void apply_setting(RunConfig &config, const std::string &key, const std::string &value,
                   const std::filesystem::path &base_dir = {});

/// "Y1:Y2"
std::pair<int, int> parse_window(std::string_view text);
/// "NxM"
std::pair<std::size_t, std::size_t> parse_grid(std::string_view text);

}  // namespace rvf
