#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "rvf/commands.hpp"
#include "rvf/config.hpp"
#include "rvf/error.hpp"
#include "rvf/parallel.hpp"

namespace {

struct Overrides {
  std::string config;
  std::map<std::string, std::string> values;
};

void add_options(CLI::App *cmd, Overrides &o) {
  cmd->set_help_flag("--help", "Print this help message and exit");
  cmd->add_option("--config", o.config, "Run configuration (key = value)")->check(CLI::ExistingFile);
  const std::pair<const char *, const char *> flags[] = {
      {"h", "Bandwidth"},
      {"alpha", "Sensitivity"},
      {"B", "Bootstrap replicates"},
      {"seed", "Random seed"},
      {"grid", "Evaluation grid NxM"},
      {"window", "Years Y1:Y2"},
      {"out", "Output directory"},
      {"panel", "Panel CSV"},
      {"crosswalk", "Crosswalk CSV"},
      {"partitions", "Partitions CSV"},
      {"membership", "Program membership CSV"},
      {"switch-year", "First year of the new partition"},
      {"merge-radius", "Single-linkage radius for attractors"},
      {"min-share", "Minimum unit share of an attractor"},
      {"long-horizon", "Integration horizon for attractors"},
  };
  for (const auto &[name, help] : flags) {
    std::string key = name;
    for (auto &c : key)
      if (c == '-') c = '_';
    cmd->add_option_function<std::string>(
        std::string("--") + name, [&o, key](const std::string &v) { o.values[key] = v; }, help);
  }
  cmd->add_flag_function(
      "--tune", [&o](std::int64_t) { o.values["tune"] = "true"; }, "Select (h, alpha) by grid search");
}

}  // namespace

int main(int argc, char **argv) {
  rvf::configure_threads();
  CLI::App app{"Random vector field analysis of spatial panel dynamics"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  Overrides o;
  for (const char *name : {"describe", "estimate", "tune", "forecast", "diag-partition-switch"})
    add_options(app.add_subcommand(name), o);
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  rvf::RunConfig config;
  try {
    if (!o.config.empty()) config = rvf::load_config(o.config);
    for (const auto &[key, value] : o.values) rvf::apply_setting(config, key, value);
  } catch (const std::exception &e) {
    std::cerr << "rvf: " << e.what() << '\n';
    return 2;
  }
  const int code = rvf::run_command(command, config);
  if (code != 0) std::cerr << "rvf " << command << ": failed, see " << (config.out / "diagnostics.json").string() << '\n';
  return code;
}
