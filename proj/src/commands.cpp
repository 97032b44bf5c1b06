#include "rvf/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "rvf/csv.hpp"
#include "rvf/error.hpp"
#include "rvf/inference.hpp"
#include "rvf/kde.hpp"
#include "rvf/moran.hpp"
#include "rvf/panel.hpp"
#include "rvf/svg.hpp"
#include "rvf/tuning.hpp"

namespace rvf {

namespace fs = std::filesystem;

void Diagnostics::write(const fs::path &out_dir) const {
  fs::create_directories(out_dir);
  nlohmann::json j;
  j["command"] = command;
  j["ok"] = errors.empty();
  j["warnings"] = warnings;
  j["errors"] = errors;
  j["info"] = info;
  std::ofstream(out_dir / "diagnostics.json") << j.dump(2) << '\n';
}

namespace {

std::ofstream open_out(const RunConfig &config, const std::string &name) {
  fs::create_directories(config.out);
  std::ofstream out(config.out / name);
  if (!out) throw InputError("cannot write " + (config.out / name).string());
  return out;
}

IngestResult load(const RunConfig &config, Diagnostics &diag, std::optional<int> start = {},
                  std::optional<int> end = {}) {
  const auto records = read_panel_csv(config.panel);
  const auto crosswalk = config.crosswalk.empty() ? Crosswalk{{}, config.reference_year}
                                                  : read_crosswalk_csv(config.crosswalk, config.reference_year);
  const auto partitions = read_partitions_csv(config.partitions);
  IngestOptions opt;
  opt.window_start = start ? start : config.window_start;
  opt.window_end = end ? end : config.window_end;
  auto result = ingest_panel(records, crosswalk, partitions, opt);
  for (const auto &w : result.report.warnings) diag.warnings.push_back(w);
  diag.info["dropped"] = result.report;
  diag.info["units"] = result.panel.unit_count();
  diag.info["window"] = {result.panel.first_year(), result.panel.last_year()};
  return result;
}

std::vector<Transition> window_transitions(const Panel &panel, int t0, int t1, Diagnostics &diag) {
  const auto w0 = weights_for_year(panel, t0);
  const auto w1 = weights_for_year(panel, t1);
  const auto singles = w0.singletons().size() + w1.singletons().size();
  if (singles > 0)
    diag.warnings.push_back(std::to_string(singles) + " unit-endpoint(s) in singleton zones excluded from transitions");
  auto tr = transitions(panel, w0, w1, t0, t1);
  if (tr.size() < 10) throw DomainError("fewer than 10 transitions between " + std::to_string(t0) + " and " +
                                        std::to_string(t1));
  diag.info["transitions"] = tr.size();
  return tr;
}

EvalGrid grid_for(const std::vector<Transition> &tr, double h, const RunConfig &config) {
  std::vector<Vec2> starts, extent;
  for (const auto &t : tr) {
    starts.push_back(t.start);
    extent.push_back(t.start);
    extent.push_back(t.end);
  }
  return EvalGrid::covering(extent, sample_covariance(starts), h, config.grid_nx, config.grid_ny);
}

TuneResult run_tune(const std::vector<Transition> &tr, const RunConfig &config, Diagnostics &diag) {
  TuneOptions opt;
  opt.grid_nx = config.grid_nx;
  opt.grid_ny = config.grid_ny;
  opt.step = config.step;
  opt.holdout_fraction = config.holdout;
  opt.holdout_seed = config.seed;
  const auto &gh = config.tune_h.empty() ? kDefaultBandwidths : config.tune_h;
  const auto &ga = config.tune_alpha.empty() ? kDefaultSensitivities : config.tune_alpha;
  auto result = tune(tr, gh, ga, opt);
  {
    auto out = open_out(config, "tune.csv");
    write_tune_csv(out, result);
  }
  const auto summary = tune_summary(result);
  open_out(config, "tune.json") << summary.dump(2) << '\n';
  if (!summary["failed"].empty())
    diag.warnings.push_back(std::to_string(summary["failed"].size()) + " tuning candidate(s) failed");
  diag.info["tune"] = summary["argmin"];
  return result;
}

std::pair<double, double> parameters(const std::vector<Transition> &tr, const RunConfig &config, Diagnostics &diag) {
  if (config.tune) {
    const auto r = run_tune(tr, config, diag);
    return {r.argmin().h, r.argmin().alpha};
  }
  return {*config.h, *config.alpha};
}

struct Estimate {
  double h = 0.0, alpha = 0.0;
  VectorFieldGrid field;
  BootstrapEnsemble ensemble;
};

Estimate estimate(const std::vector<Transition> &tr, const RunConfig &config, Diagnostics &diag) {
  Estimate e;
  std::tie(e.h, e.alpha) = parameters(tr, config, diag);
  const auto grid = grid_for(tr, e.h, config);
  e.field = estimate_rvf(tr, e.h, e.alpha, grid);
  diag.info["h"] = e.h;
  diag.info["alpha"] = e.alpha;
  diag.info["grid"] = {grid.nx, grid.ny};
  diag.info["non_empty_nodes"] = e.field.non_empty_count();
  if (config.replicates == 0) {
    diag.warnings.push_back("B = 0: significance not computed");
    return e;
  }
  if (config.replicates < 100) diag.warnings.push_back("fewer than 100 bootstrap replicates");
  e.ensemble = bootstrap_fields(tr, e.h, e.alpha, grid, config.replicates, config.seed);
  if (const auto d = e.ensemble.degenerate_count())
    diag.warnings.push_back(std::to_string(d) + " degenerate bootstrap replicate(s)");
  SignificanceOptions so;
  so.level = config.significance_level;
  annotate_field(e.field, e.ensemble, so);
  diag.info["significant_nodes"] = std::count(e.field.significant.begin(), e.field.significant.end(), 1);
  diag.info["bootstrap"] = {{"B", config.replicates}, {"seed", config.seed}};
  return e;
}

MoranCurve curve_for(const Panel &panel, int year, const RunConfig &config) {
  const auto w = weights_for_year(panel, year);
  MoranCurveOptions opt;
  opt.replicates = config.curve_replicates;
  opt.seed = config.seed;
  return moran_curve(to_moran(panel, w, year), opt);
}

void write_curve(const RunConfig &config, const MoranCurve &c, int year) {
  auto out = open_out(config, "moran_curve_" + std::to_string(year) + ".csv");
  write_curve_csv(out, c);
}

svg::Plot field_plot(const VectorFieldGrid &field) {
  const auto &g = field.grid;
  return svg::Plot({g.x_min, g.x_max}, {g.y_min, g.y_max});
}

void draw_arrows(svg::Plot &plot, const VectorFieldGrid &field) {
  for (std::size_t i = 0; i < field.grid.size(); ++i) {
    if (field.is_empty(i)) continue;
    const bool sig = field.significant[i] != 0;
    plot.arrow(field.grid.node(i), kArrowScale * field.arrows[i], sig ? "#c0392b" : "#95a5a6",
               sig ? "arrow significant" : "arrow");
  }
}

std::vector<Vec2> starts_of(const std::vector<Transition> &tr) {
  std::vector<Vec2> out;
  for (const auto &t : tr) out.push_back(t.start);
  return out;
}

std::vector<Vec2> ends_of(const std::vector<Transition> &tr) {
  std::vector<Vec2> out;
  for (const auto &t : tr) out.push_back(t.end);
  return out;
}

template <class Body>
int guarded(Diagnostics &diag, Body &&body) {
  try {
    body();
    return 0;
  } catch (const std::exception &e) {
    diag.errors.push_back(e.what());
    return 1;
  }
}

}  // namespace

int cmd_describe(const RunConfig &config, Diagnostics &diag) {
  diag.command = "describe";
  return guarded(diag, [&] {
    config.validate(false);
    const auto panel = load(config, diag).panel;
    auto out = open_out(config, "describe.csv");
    out << "year,mean_density,cv,var_total,between_share,within_share,morans_i,morans_i_lo,morans_i_hi\n";
    std::vector<double> years, cv, between, within, mi, mi_lo, mi_hi;
    for (int year : panel.years()) {
      const auto d = dispersion_stats(panel, year);
      MoranStatistic m{std::nan(""), std::nan(""), std::nan(""), std::nan(""), std::nan(""), 0};
      try {
        m = morans_i(to_moran(panel, weights_for_year(panel, year), year), weights_for_year(panel, year),
                     config.permutations, config.seed);
      } catch (const DomainError &e) {
        diag.warnings.push_back(std::to_string(year) + ": Moran's I undefined (" + e.what() + ")");
      }
      if (d.degenerate) diag.warnings.push_back(std::to_string(year) + ": zero log-density variance");
      csv::write_row(out, {std::to_string(year), csv::format(d.mean_density), csv::format(d.cv),
                           csv::format(d.var_total), csv::format(d.between_share), csv::format(d.within_share),
                           csv::format(m.value), csv::format(m.lo), csv::format(m.hi)});
      years.push_back(year);
      cv.push_back(d.cv);
      between.push_back(d.between_share);
      within.push_back(d.within_share);
      mi.push_back(m.value);
      mi_lo.push_back(m.lo);
      mi_hi.push_back(m.hi);
    }

    auto series = [&](const std::vector<double> &y) {
      std::vector<Vec2> p;
      for (std::size_t i = 0; i < y.size(); ++i) p.push_back({years[i], y[i]});
      return p;
    };
    const svg::Range xr{years.front() - 0.5, years.back() + 0.5};
    {
      svg::Plot p(xr, svg::extent(cv, 0.1));
      p.title("Coefficient of variation of density");
      p.axis_labels("year", "CV");
      p.polyline(series(cv), svg::palette(0), 2.0, "line cv");
      open_out(config, "describe_cv.svg") << p.str();
    }
    {
      std::vector<double> all = mi;
      all.insert(all.end(), mi_lo.begin(), mi_lo.end());
      all.insert(all.end(), mi_hi.begin(), mi_hi.end());
      svg::Plot p(xr, svg::extent(all, 0.1));
      p.title("Global Moran's I");
      p.axis_labels("year", "I");
      p.band(years, mi_lo, mi_hi, svg::palette(2));
      p.polyline(series(mi), svg::palette(2), 2.0, "line moran");
      p.legend("Moran's I", svg::palette(2));
      p.legend("permutation 95% band", "#c9c6e6");
      open_out(config, "describe_moran.svg") << p.str();
    }
    {
      svg::Plot p(xr, {0.0, 1.0});
      p.title("Log-density variance decomposition");
      p.axis_labels("year", "share of total variance");
      p.polyline(series(between), svg::palette(0), 2.0, "line between");
      p.polyline(series(within), svg::palette(1), 2.0, "line within");
      p.legend("between zones", svg::palette(0));
      p.legend("within zones", svg::palette(1));
      open_out(config, "describe_variance.svg") << p.str();
    }
    diag.info["rows"] = years.size();
  });
}

int cmd_tune(const RunConfig &config, Diagnostics &diag) {
  diag.command = "tune";
  return guarded(diag, [&] {
    config.validate(false);
    const auto panel = load(config, diag).panel;
    const auto tr = window_transitions(panel, panel.first_year(), panel.last_year(), diag);
    run_tune(tr, config, diag);
  });
}

int cmd_estimate(const RunConfig &config, Diagnostics &diag) {
  diag.command = "estimate";
  return guarded(diag, [&] {
    config.validate(true);
    const auto panel = load(config, diag).panel;
    const int t0 = panel.first_year(), t1 = panel.last_year();
    const auto tr = window_transitions(panel, t0, t1, diag);
    const auto e = estimate(tr, config, diag);
    {
      auto out = open_out(config, "field.csv");
      write_field_csv(out, e.field);
    }
    const auto c0 = curve_for(panel, t0, config);
    const auto c1 = curve_for(panel, t1, config);
    write_curve(config, c0, t0);
    write_curve(config, c1, t1);

    auto plot = field_plot(e.field);
    plot.title("Random vector field " + std::to_string(t0) + "-" + std::to_string(t1) + " (arrows x 1/5)");
    plot.axis_labels("log density", "neighbour average");
    plot.points(starts_of(tr), "#7f8c8d", 1.5, "point start");
    const std::pair<const MoranCurve *, int> curves[] = {{&c0, t0}, {&c1, t1}};
    for (std::size_t k = 0; k < 2; ++k) {
      const auto &c = *curves[k].first;
      std::vector<Vec2> pts;
      for (std::size_t i = 0; i < c.x.size(); ++i) pts.push_back({c.x[i], c.fit[i]});
      plot.band(c.x, c.lo, c.hi, svg::palette(k + 2), 0.15);
      plot.polyline(pts, svg::palette(k + 2), 2.0, "line curve", k == 1);
      plot.legend("Moran curve " + std::to_string(curves[k].second), svg::palette(k + 2));
    }
    draw_arrows(plot, e.field);
    plot.legend("significant arrow", "#c0392b");
    plot.legend("not significant", "#95a5a6");
    open_out(config, "field.svg") << plot.str();
  });
}

int cmd_forecast(const RunConfig &config, Diagnostics &diag) {
  diag.command = "forecast";
  return guarded(diag, [&] {
    config.validate(true);
    const auto panel = load(config, diag).panel;
    const int t1 = panel.last_year();
    const auto tr = window_transitions(panel, panel.first_year(), t1, diag);
    const auto e = estimate(tr, config, diag);
    {
      auto out = open_out(config, "field.csv");
      write_field_csv(out, e.field);
    }

    AttractorOptions ao;
    ao.horizon = config.long_horizon;
    ao.step = config.step;
    ao.merge_radius = config.merge_radius;
    ao.min_share = config.min_share;
    ao.min_radius = config.min_radius;
    ao.assign_factor = config.assign_factor;
    ao.labels = config.labels;
    if (!ao.labels.empty()) diag.info["labels_override"] = ao.labels;

    const auto ends = ends_of(tr);
    std::vector<std::size_t> units;
    std::vector<double> population;
    const auto yi = panel.year_index(t1);
    for (const auto &t : tr) {
      units.push_back(t.unit);
      population.push_back(static_cast<double>(panel.population(t.unit, yi)));
    }
    const auto search = find_attractors(e.field, ends, ao);
    if (!config.labels.empty() && config.labels.size() != search.attractors.size())
      diag.warnings.push_back("label override ignored: " + std::to_string(config.labels.size()) + " labels for " +
                              std::to_string(search.attractors.size()) + " attractors");
    const auto report = basin_probabilities(e.ensemble, search, ends, units, population, ao);

    IntegrateOptions io;
    io.step = config.step;
    io.stop_tolerance = ao.stop_tolerance;
    io.record_every = std::max<std::size_t>(1, config.trajectory_every);
    const auto trajs = forecast_all(e.field, ends, units, config.long_horizon, io);
    {
      auto out = open_out(config, "trajectories.csv");
      write_trajectories_csv(out, trajs, panel.units());
    }
    std::size_t holes = 0, clamped = 0;
    for (const auto &t : trajs) {
      holes += t.hole;
      clamped += t.clamped;
    }
    if (holes) diag.warnings.push_back(std::to_string(holes) + " trajectories crossed empty cells");
    if (clamped) diag.warnings.push_back(std::to_string(clamped) + " trajectories left the grid and were clamped");

    auto j = report_json(report, panel.units());
    j["window"] = {panel.first_year(), t1};
    j["parameters"] = {{"h", e.h}, {"alpha", e.alpha}, {"B", config.replicates}, {"seed", config.seed}};
    if (config.membership) {
      const auto membership = read_membership_csv(*config.membership);
      const auto table = policy_overlay(report, panel.units(), population, membership);
      auto out = open_out(config, "overlay.csv");
      write_overlay_csv(out, table);
      if (!table.unknown_ids.empty())
        diag.warnings.push_back(std::to_string(table.unknown_ids.size()) + " membership id(s) not in the report");
      diag.info["overlay_unknown_ids"] = table.unknown_ids;
    }
    open_out(config, "report.json") << j.dump(2) << '\n';
    diag.info["attractors"] = search.attractors.size();
    diag.info["replicates_used"] = report.replicates_used;

    auto plot = field_plot(e.field);
    plot.title("Basins of attraction from " + std::to_string(t1));
    plot.axis_labels("log density", "neighbour average");
    std::vector<std::vector<Vec2>> by_class(search.attractors.size() + 1);
    for (std::size_t k = 0; k < ends.size(); ++k) {
      const int m = report.modal_class(k);
      by_class[m < 0 ? search.attractors.size() : static_cast<std::size_t>(m)].push_back(ends[k]);
    }
    for (std::size_t a = 0; a < search.attractors.size(); ++a) {
      plot.points(by_class[a], svg::palette(a), 2.0, "point basin");
      plot.circle(search.attractors[a].center, search.attractors[a].radius, svg::palette(a),
                  search.attractors[a].label);
      plot.legend(search.attractors[a].label, svg::palette(a));
    }
    plot.points(by_class.back(), "#000000", 2.0, "point unresolved");
    plot.legend("unresolved", "#000000");
    open_out(config, "basins.svg") << plot.str();
  });
}

std::optional<double> vertical_ratio(const VectorFieldGrid &field) {
  std::vector<double> r;
  for (std::size_t i = 0; i < field.grid.size(); ++i) {
    if (field.is_empty(i) || !field.significant[i]) continue;
    const auto &a = field.arrows[i];
    r.push_back(a.y == 0.0 ? INFINITY : std::abs(a.x) / std::abs(a.y));
  }
  if (r.empty()) return std::nullopt;
  std::sort(r.begin(), r.end());
  const auto m = r.size() / 2;
  return r.size() % 2 ? r[m] : 0.5 * (r[m - 1] + r[m]);
}

int cmd_diag_partition_switch(const RunConfig &config, Diagnostics &diag) {
  diag.command = "diag-partition-switch";
  return guarded(diag, [&] {
    config.validate(true);
    const auto panel = load(config, diag).panel;
    int s = 0;
    if (config.switch_year) {
      s = *config.switch_year;
    } else {
      for (std::size_t k = 1; k < panel.years().size() && !s; ++k) {
        const int y = panel.years()[k];
        if (panel.partition_for(y).valid_from != panel.partition_for(y - 1).valid_from) s = y;
      }
      if (!s) throw InputError("no partition switch inside the window; set switch_year");
    }
    if (!panel.has_year(s - 1) || !panel.has_year(s))
      throw InputError("years " + std::to_string(s - 1) + " and " + std::to_string(s) + " must both be in the window");
    const auto tr = window_transitions(panel, s - 1, s, diag);
    const auto e = estimate(tr, config, diag);
    {
      auto out = open_out(config, "field.csv");
      write_field_csv(out, e.field);
    }
    const auto ratio = vertical_ratio(e.field);
    nlohmann::json j;
    j["switch_year"] = s;
    j["start_year"] = s - 1;
    j["end_year"] = s;
    j["partition_changed"] = panel.partition_for(s - 1).valid_from != panel.partition_for(s).valid_from;
    j["significant_nodes"] = std::count(e.field.significant.begin(), e.field.significant.end(), 1);
    j["threshold"] = 0.2;
    j["flags"] = nlohmann::json::array();
    if (ratio) {
      j["median_abs_dx_over_dy"] = std::isfinite(*ratio) ? nlohmann::json(*ratio) : nlohmann::json("inf");
      j["vertical"] = *ratio < 0.2;
    } else {
      j["median_abs_dx_over_dy"] = nullptr;
      j["vertical"] = nullptr;
      j["flags"].push_back("no_significant_nodes");
      diag.warnings.push_back("no significant nodes; statistic not reported");
    }
    open_out(config, "partition_switch.json") << j.dump(2) << '\n';
    diag.info["partition_switch"] = j;

    auto plot = field_plot(e.field);
    plot.title("Transitions " + std::to_string(s - 1) + "-" + std::to_string(s) + " (arrows x 1/5)");
    plot.axis_labels("log density", "neighbour average");
    plot.points(starts_of(tr), "#7f8c8d", 1.5, "point start");
    draw_arrows(plot, e.field);
    open_out(config, "partition_switch.svg") << plot.str();
  });
}

int run_command(const std::string &name, const RunConfig &config) {
  Diagnostics diag;
  int code = 1;
  if (name == "describe") code = cmd_describe(config, diag);
  else if (name == "estimate") code = cmd_estimate(config, diag);
  else if (name == "tune") code = cmd_tune(config, diag);
  else if (name == "forecast") code = cmd_forecast(config, diag);
  else if (name == "diag-partition-switch") code = cmd_diag_partition_switch(config, diag);
  else {
    diag.command = name;
    diag.errors.push_back("unknown command '" + name + "'");
  }
  try {
    diag.write(config.out);
  } catch (const std::exception &) {
    return 1;
  }
  return code;
}

}  // namespace rvf
