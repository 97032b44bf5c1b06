#include <iostream>

#include <CLI11.hpp>

#include "rvf/synthetic.hpp"

int main(int argc, char **argv) {
  CLI::App app{"Writes a synthetic panel fixture (panel, crosswalk, partitions)"};
  rvf::synthetic::PanelSpec spec;
  std::string out = "data/synthetic";
  app.add_option("--out", out, "Output directory");
  app.add_option("--zones", spec.zones, "Number of zones");
  app.add_option("--first-year", spec.first_year);
  app.add_option("--last-year", spec.last_year);
  app.add_option("--switch-year", spec.switch_year, "First year of the merged partition (0 = none)");
  app.add_option("--frozen", spec.frozen_years, "Years whose populations repeat the previous year");
  app.add_option("--split-until", spec.split_until, "Last year of split historical units (0 = none)");
  app.add_option("--seed", spec.seed);
  CLI11_PARSE(app, argc, argv);

  const auto fx = rvf::synthetic::make_panel(spec);
  rvf::synthetic::write_fixture(out, fx);
  std::cout << "wrote " << fx.records.size() << " records to " << out << '\n';
  return 0;
}
