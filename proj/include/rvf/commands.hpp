#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rvf/config.hpp"
#include "rvf/field.hpp"

namespace rvf {

/// Warnings, hard errors and per-command facts, written to
/// `<out>/diagnostics.json` by every command.
struct Diagnostics {
  std::string command;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;
  nlohmann::json info = nlohmann::json::object();

  void write(const std::filesystem::path &out_dir) const;
};

/// Each command returns its exit code: 0 iff no hard error occurred.
/// All files are written below config.out.
int cmd_describe(const RunConfig &config, Diagnostics &diag);
int cmd_estimate(const RunConfig &config, Diagnostics &diag);
int cmd_tune(const RunConfig &config, Diagnostics &diag);
int cmd_forecast(const RunConfig &config, Diagnostics &diag);
int cmd_diag_partition_switch(const RunConfig &config, Diagnostics &diag);

/// Dispatches by subcommand name and always writes diagnostics.json.
int run_command(const std::string &name, const RunConfig &config);

/// Median |dx|/|dy| over significant non-empty nodes; empty when no node
/// is significant. A zero dy counts as an infinite ratio.
std::optional<double> vertical_ratio(const VectorFieldGrid &field);

/// Arrows are drawn at this fraction of their length.
inline constexpr double kArrowScale = 0.2;

}  // namespace rvf
