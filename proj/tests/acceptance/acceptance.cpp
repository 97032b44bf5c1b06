// Acceptance suite: one line per criterion, PASS / FAIL / SKIP.
// Criteria 9-12 need the ISTAT-derived panel; point RVF_ISTAT_DIR at a
// directory holding panel.csv, partitions.csv and (optionally) crosswalk.csv.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rvf/commands.hpp"
#include "rvf/error.hpp"
#include "rvf/field.hpp"
#include "rvf/flow.hpp"
#include "rvf/inference.hpp"
#include "rvf/kde.hpp"
#include "rvf/moran.hpp"
#include "rvf/parallel.hpp"
#include "rvf/stats.hpp"
#include "rvf/synthetic.hpp"
#include "rvf/tuning.hpp"

namespace fs = std::filesystem;
using rvf::Vec2;
using Clock = std::chrono::steady_clock;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, const std::string &detail) { return {ok ? Status::Pass : Status::Fail, detail}; }

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<Vec2> random_cloud(std::mt19937_64 &rng, std::size_t n) {
  // Two Gaussian blobs with different spreads, so local factors vary.
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool a = i % 3 != 0;
    const double s = a ? 0.6 : 1.5;
    out.push_back({(a ? 2.0 : 5.0) + s * rvf::synthetic::normal(rng), (a ? 3.0 : 5.0) + 0.8 * s * rvf::synthetic::normal(rng)});
  }
  return out;
}

Outcome weight_normalization() {
  double worst = 0.0;
  std::size_t nodes = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto starts = random_cloud(rng, 200);
    std::vector<Vec2> deltas;
    for (std::size_t i = 0; i < starts.size(); ++i)
      deltas.push_back({rvf::synthetic::normal(rng), rvf::synthetic::normal(rng)});
    const double h = rvf::kDefaultBandwidths[seed % 10];
    const double alpha = rvf::kDefaultSensitivities[(seed * 7) % 10];
    const rvf::RvfEstimator est(starts, deltas, h, alpha);
    const auto grid = rvf::EvalGrid::covering(starts, est.density().estimate.covariance(), h, 40, 40);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto w = est.weights(grid.node(i));
      if (w.empty()) continue;
      double s = 0.0;
      for (const auto &[j, wj] : w) s += wj;
      worst = std::max(worst, std::abs(s - 1.0));
      ++nodes;
    }
  }
  return verdict(nodes > 0 && worst <= 1e-10, fmt("max |sum w - 1| = %.3g over %zu non-empty nodes", worst, nodes));
}

Outcome adaptive_reduction() {
  std::mt19937_64 rng(11);
  const auto pts = random_cloud(rng, 300);
  const double h = 0.29;
  const auto adaptive = rvf::adaptive_density(pts, h, 0.0);
  const auto pilot = rvf::pilot_density(pts, h);
  double worst = 0.0;
  for (int q = 0; q < 10000; ++q) {
    const Vec2 z{rvf::synthetic::uniform(rng, -3.0, 10.0), rvf::synthetic::uniform(rng, -1.0, 9.0)};
    worst = std::max(worst, std::abs(adaptive(z) - pilot(z)));
  }
  return verdict(worst <= 1e-12, fmt("max |adaptive - pilot| = %.3g at 10^4 points", worst));
}

Outcome kde_mass() {
  std::mt19937_64 rng(5);
  const auto pts = random_cloud(rng, 400);
  const auto f = rvf::adaptive_density(pts, 0.21, 0.2108);
  const auto &S = f.estimate.covariance();
  double lmax = 0.0;
  for (double l : f.estimate.lambda()) lmax = std::max(lmax, l);
  const double r = 0.21 * lmax * 1.01;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto &p : pts) {
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x), y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  }
  x0 -= r * std::sqrt(S.xx), x1 += r * std::sqrt(S.xx), y0 -= r * std::sqrt(S.yy), y1 += r * std::sqrt(S.yy);
  const int n = 600;
  const double dx = (x1 - x0) / n, dy = (y1 - y0) / n;
  double mass = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) mass += f({x0 + (i + 0.5) * dx, y0 + (j + 0.5) * dy});
  mass *= dx * dy;
  return verdict(std::abs(mass - 1.0) <= 0.01, fmt("integral = %.5f (midpoint rule, %dx%d)", mass, n, n));
}

Outcome ode_accuracy() {
  const auto t0 = Clock::now();
  // Constant field on a grid.
  rvf::VectorFieldGrid field;
  field.grid = {-4.0, 4.0, -4.0, 4.0, 9, 9};
  field.arrows.assign(81, {0.25, -0.5});
  field.mass.assign(81, 1.0);
  field.horizon = 1;
  rvf::IntegrateOptions opt;
  opt.step = 1e-3;
  const Vec2 z0{0.5, 0.25};
  const auto c = rvf::integrate(field, z0, 2.0, opt).terminal;
  const Vec2 expect{z0.x + 2.0 * 0.25, z0.y - 2.0 * 0.5};
  const double const_err = rvf::distance(c, expect);

  // Linear field dz/dt = A z with A = [[-0.5, 1], [-1, -0.5]]: spiral with
  // closed form e^{-t/2} R(-t) z0.
  auto lin = [](const Vec2 &p) { return rvf::FieldSample{{-0.5 * p.x + p.y, -p.x - 0.5 * p.y}}; };
  auto exact = [](const Vec2 &p, double t) {
    const double e = std::exp(-0.5 * t), c = std::cos(t), s = std::sin(t);
    return Vec2{e * (c * p.x + s * p.y), e * (-s * p.x + c * p.y)};
  };
  const Vec2 p0{1.0, 0.5};
  auto err_at = [&](double step) {
    rvf::IntegrateOptions o;
    o.step = step;
    o.record_every = static_cast<std::size_t>(-1);
    return rvf::distance(rvf::integrate_rk4(lin, p0, 2.0, o).terminal, exact(p0, 2.0));
  };
  const double lin_err = err_at(1e-3);
  const double e1 = err_at(0.1), e2 = err_at(0.05), e3 = err_at(0.025);
  const double order = std::min(std::log2(e1 / e2), std::log2(e2 / e3));
  const double secs = seconds_since(t0);
  return verdict(const_err == 0.0 && lin_err <= 1e-8 && order >= 3.5 && secs < 1.0,
                 fmt("constant err = %.3g, linear err = %.3g, order = %.2f, %.3f s", const_err, lin_err, order, secs));
}

Outcome brute_force() {
  double worst_arrow = 0.0, worst_i = 0.0, worst_lag = 0.0, worst_var = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const std::size_t n = 50;
    // RVF arrows against a double-loop oracle.
    const auto starts = random_cloud(rng, n);
    std::vector<Vec2> deltas;
    for (std::size_t i = 0; i < n; ++i) deltas.push_back({rvf::synthetic::normal(rng), rvf::synthetic::normal(rng)});
    const double h = 0.41, alpha = 0.2108;
    const rvf::RvfEstimator est(starts, deltas, h, alpha);
    const oracle::Adaptive ref(starts, h, alpha);
    const auto grid = rvf::EvalGrid::covering(starts, est.density().estimate.covariance(), h, 25, 25);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const auto got = est.at(grid.node(i)).arrow;
      const auto want = oracle::rvf_arrow(ref, deltas, grid.node(i));
      if (std::isnan(want.x) != std::isnan(got.x)) worst_arrow = INFINITY;
      else if (!std::isnan(want.x)) worst_arrow = std::max(worst_arrow, rvf::distance(got, want));
    }

    // Zones of random sizes, including a singleton.
    std::vector<std::string> zone(n);
    for (std::size_t i = 0; i < n; ++i) zone[i] = i == 0 ? "single" : "z" + std::to_string(rng() % 7);
    rvf::ZonePartition part;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
      char id[8];
      std::snprintf(id, sizeof id, "u%02zu", i);
      ids.push_back(id);
      part.zone_of[id] = zone[i];
    }
    const auto w = rvf::WeightMatrix::build(part, ids);
    std::vector<double> y(n);
    for (auto &v : y) v = 4.0 + 2.0 * rvf::synthetic::normal(rng);
    const auto dense = oracle::dense_weights(zone);
    const auto lag_ref = oracle::lag(dense, y);
    const auto lag = w.lag(y);
    std::vector<std::size_t> keep;
    std::vector<double> kept;
    for (std::size_t i = 0; i < n; ++i) {
      if (w.is_singleton(i)) continue;
      worst_lag = std::max(worst_lag, std::abs(lag[i] - lag_ref[i]));
      keep.push_back(i);
      kept.push_back(y[i]);
    }
    worst_i = std::max(worst_i, std::abs(rvf::morans_i_value(kept, keep, w) - oracle::morans_i(dense, y, keep)));

    // Variance decomposition through a one-year panel.
    std::vector<rvf::UnitRecord> recs;
    for (std::size_t i = 0; i < n; ++i) {
      recs.push_back({ids[i], 2000, static_cast<std::int64_t>(1000 + rng() % 100000), 10.0});
      recs.push_back({ids[i], 2001, 1000, 10.0});
    }
    part.valid_from = 2000;
    part.valid_to = 2001;
    const auto panel = rvf::ingest_panel(recs, {}, {part}).panel;
    const auto d = rvf::dispersion_stats(panel, 2000);
    const auto ref_d = oracle::variance_decomposition(panel.log_density_column(2000), zone);
    worst_var = std::max({worst_var, std::abs(d.var_total - ref_d.total), std::abs(d.var_between - ref_d.between),
                          std::abs(d.var_within - ref_d.within)});
  }
  const bool ok = worst_arrow <= 1e-12 && worst_i <= 1e-12 && worst_lag <= 1e-12 && worst_var <= 1e-12;
  return verdict(ok, fmt("max diff: arrows %.3g, Moran's I %.3g, lags %.3g, variance %.3g", worst_arrow, worst_i,
                         worst_lag, worst_var));
}

double angle_between(const Vec2 &a, const Vec2 &b) {
  const double c = rvf::dot(a, b) / (rvf::norm(a) * rvf::norm(b));
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

Outcome field_recovery() {
  const auto t0 = Clock::now();
  const auto tr = rvf::synthetic::double_well_transitions(2000, 0.1, 2024);
  const auto tuned = rvf::tune(tr, rvf::kDefaultBandwidths, rvf::kDefaultSensitivities);
  const double h = tuned.argmin().h, alpha = tuned.argmin().alpha;
  std::vector<Vec2> extent;
  for (const auto &t : tr) extent.push_back(t.start), extent.push_back(t.end);
  std::vector<Vec2> starts;
  for (const auto &t : tr) starts.push_back(t.start);
  const auto grid = rvf::EvalGrid::covering(extent, rvf::sample_covariance(starts), h, 50, 50);
  auto field = rvf::estimate_rvf(tr, h, alpha, grid);
  const auto ens = rvf::bootstrap_fields(tr, h, alpha, grid, 100, 7);
  rvf::annotate_field(field, ens);

  std::vector<double> errors;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (field.is_empty(i) || !field.significant[i]) continue;
    const Vec2 truth = rvf::synthetic::double_well(grid.node(i));
    if (rvf::norm(truth) == 0.0) continue;
    errors.push_back(angle_between(field.arrows[i], truth));
  }
  const double median_err = rvf::stats::quantile(errors, 0.5);

  const auto search = rvf::find_attractors(field, starts);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const int a = search.assignment[k];
    if (a >= 0 && rvf::synthetic::double_well_basin(search.attractors[a].center) == rvf::synthetic::double_well_basin(starts[k]))
      ++correct;
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(starts.size());
  double center_err = INFINITY;
  if (search.attractors.size() == 2)
    center_err = std::max(rvf::distance(search.attractors[0].center, {-2.0, 0.0}),
                          rvf::distance(search.attractors[1].center, {2.0, 0.0}));
  const double secs = seconds_since(t0);
  const bool ok = median_err <= 15.0 && accuracy >= 0.95 && center_err <= 0.2 && secs <= 60.0;
  return verdict(ok, fmt("median angular error %.2f deg over %zu significant nodes, accuracy %.4f, %zu attractors, "
                         "center error %.4f, tuned (h, alpha) = (%g, %g), %.1f s on %d thread(s)",
                         median_err, errors.size(), accuracy, search.attractors.size(), center_err, h, alpha, secs,
                         rvf::thread_count()));
}

Outcome size_calibration() {
  std::vector<double> rates, chi_rates;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto tr = rvf::synthetic::noise_transitions(1000, 0.1, 500 + seed);
    const double h = 0.29, alpha = 0.0067;
    std::vector<Vec2> starts;
    for (const auto &t : tr) starts.push_back(t.start);
    const auto grid = rvf::EvalGrid::covering(starts, rvf::sample_covariance(starts), h, 30, 30);
    const auto field = rvf::estimate_rvf(tr, h, alpha, grid);
    const auto ens = rvf::bootstrap_fields(tr, h, alpha, grid, 200, seed);
    const auto sig = rvf::flag_significance(ens, field.effective_n);
    rvf::SignificanceOptions large;
    large.small_sample = false;
    const auto chi = rvf::flag_significance(ens, {}, large);
    std::size_t flagged = 0, chi_flagged = 0, defined = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (field.is_empty(i)) continue;
      ++defined;
      flagged += sig[i];
      chi_flagged += chi[i];
    }
    rates.push_back(static_cast<double>(flagged) / static_cast<double>(defined));
    chi_rates.push_back(static_cast<double>(chi_flagged) / static_cast<double>(defined));
  }
  const double median = rvf::stats::quantile(rates, 0.5);
  const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
  return verdict(median <= 0.10, fmt("median flagged share %.4f (range %.4f-%.4f, 10 seeds, N=1000, B=200); "
                                     "large-sample threshold alone: %.4f",
                                     median, *lo, *hi, rvf::stats::quantile(chi_rates, 0.5)));
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "rvf_acceptance_determinism";
  fs::remove_all(root);
  rvf::synthetic::PanelSpec spec;
  spec.zones = 14;
  spec.seed = 99;
  rvf::synthetic::write_fixture(root / "data", rvf::synthetic::make_panel(spec));
  std::vector<std::string> files;
  bool ok = true;
  for (int run = 0; run < 2; ++run) {
    rvf::RunConfig c;
    c.panel = root / "data/panel.csv";
    c.crosswalk = root / "data/crosswalk.csv";
    c.partitions = root / "data/partitions.csv";
    c.h = 0.29;
    c.alpha = 0.0067;
    c.replicates = 30;
    c.seed = 17;
    c.grid_nx = c.grid_ny = 30;
    c.out = root / ("run" + std::to_string(run));
    ok &= rvf::run_command("forecast", c) == 0;
  }
  std::size_t compared = 0;
  for (const auto &e : fs::directory_iterator(root / "run0")) {
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".json") continue;
    ++compared;
    ok &= slurp(e.path()) == slurp(root / "run1" / e.path().filename());
  }
  fs::remove_all(root);
  return verdict(ok && compared >= 4, fmt("%zu CSV/JSON artifacts compared byte-for-byte", compared));
}

}  // namespace

// ---------------------------------------------------------------------------
// ISTAT-backed criteria.

namespace {

struct Istat {
  rvf::Panel panel;
  std::vector<rvf::Transition> tr;
};

std::optional<Istat> load_istat() {
  const char *dir = std::getenv("RVF_ISTAT_DIR");
  if (!dir || !fs::is_directory(dir)) return std::nullopt;
  const fs::path d = dir;
  const auto records = rvf::read_panel_csv(d / "panel.csv");
  const auto cw = fs::exists(d / "crosswalk.csv") ? rvf::read_crosswalk_csv(d / "crosswalk.csv") : rvf::Crosswalk{};
  const auto parts = rvf::read_partitions_csv(d / "partitions.csv");
  rvf::IngestOptions opt;
  opt.window_start = 1984;
  opt.window_end = 2019;
  Istat out{rvf::ingest_panel(records, cw, parts, opt).panel, {}};
  out.tr = rvf::transitions(out.panel, rvf::weights_for_year(out.panel, 1984), rvf::weights_for_year(out.panel, 2019),
                            1984, 2019);
  return out;
}

std::size_t istat_replicates() {
  const char *b = std::getenv("RVF_ISTAT_B");
  return b ? static_cast<std::size_t>(std::stoul(b)) : 100;
}

}  // namespace

int main() {
  rvf::configure_threads();
  int failures = 0;
  auto report = [&](int id, const char *name, const std::function<Outcome()> &run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception &e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const char *tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    if (o.status == Status::Fail) ++failures;
    std::printf("[%s] %2d %-34s %s\n", tag, id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "weight normalization", weight_normalization);
  report(2, "adaptive reduction at alpha=0", adaptive_reduction);
  report(3, "KDE mass", kde_mass);
  report(4, "ODE exactness and order", ode_accuracy);
  report(5, "brute-force equivalence", brute_force);
  report(6, "synthetic field recovery", field_recovery);
  report(7, "bootstrap size calibration", size_calibration);
  report(8, "forecast determinism", determinism);

  std::optional<Istat> istat;
  try {
    istat = load_istat();
  } catch (const std::exception &e) {
    std::printf("ISTAT dataset present but unreadable: %s\n", e.what());
    ++failures;
  }
  const Outcome skip{Status::Skip, "RVF_ISTAT_DIR not set"};
  if (!istat) {
    for (int id : {9, 10, 11, 12}) report(id, "ISTAT reproduction", [&] { return skip; });
    return failures == 0 ? 0 : 1;
  }

  const double h_star = 0.21, a_star = 0.0067;
  report(9, "tuning optimum", [&] {
    const auto r = rvf::tune(istat->tr, rvf::kDefaultBandwidths, rvf::kDefaultSensitivities);
    const auto &b = r.argmin();
    return verdict(b.alpha == a_star && b.h == h_star, fmt("argmin (alpha, h) = (%g, %g)", b.alpha, b.h));
  });

  std::vector<Vec2> starts, ends;
  for (const auto &t : istat->tr) starts.push_back(t.start), ends.push_back(t.end);
  std::vector<Vec2> extent = starts;
  extent.insert(extent.end(), ends.begin(), ends.end());
  const auto grid = rvf::EvalGrid::covering(extent, rvf::sample_covariance(starts), h_star, 50, 50);
  const auto field = rvf::estimate_rvf(istat->tr, h_star, a_star, grid);
  std::optional<rvf::AttractorSearch> search;
  report(10, "three attractors", [&] {
    search = rvf::find_attractors(field, ends);
    const Vec2 targets[] = {{0.0, 3.0}, {2.5, 5.0}, {8.5, 8.0}};
    std::string centers;
    double worst = 0.0;
    for (const auto &a : search->attractors) centers += fmt("(%.2f, %.2f) ", a.center.x, a.center.y);
    if (search->attractors.size() != 3) return verdict(false, "found " + centers);
    for (int k = 0; k < 3; ++k) worst = std::max(worst, rvf::distance(search->attractors[k].center, targets[k]));
    return verdict(worst <= 0.75, fmt("centers %s max distance %.3f", centers.c_str(), worst));
  });

  report(11, "Table 1 shares inside bands", [&] {
    if (!search || search->attractors.size() != 3) return verdict(false, "requires three attractors");
    const auto B = istat_replicates();
    const auto ens = rvf::bootstrap_fields(istat->tr, h_star, a_star, grid, B, 1);
    std::vector<std::size_t> units;
    std::vector<double> pop;
    const auto yi = istat->panel.year_index(2019);
    for (const auto &t : istat->tr) {
      units.push_back(t.unit);
      pop.push_back(static_cast<double>(istat->panel.population(t.unit, yi)));
    }
    const auto rep = rvf::basin_probabilities(ens, *search, ends, units, pop);
    // rural, suburban, urban in ascending own-density order.
    const double mu_lo[] = {0.015, 0.011, 0.625}, mu_hi[] = {0.300, 0.335, 0.745};
    const double pop_lo[] = {0.001, 0.001, 0.921}, pop_hi[] = {0.067, 0.069, 0.947};
    bool ok = true;
    std::string detail = fmt("B=%zu", B);
    for (int a = 0; a < 3; ++a) {
      const double m = rep.unit_share[a].point, p = rep.population_share[a].point;
      ok &= m >= mu_lo[a] && m <= mu_hi[a] && p >= pop_lo[a] && p <= pop_hi[a];
      detail += fmt(" %s %.3f/%.3f", rep.attractors[a].label.c_str(), m, p);
    }
    return verdict(ok, detail);
  });

  report(12, "partition-switch diagnostic", [&] {
    const auto tr = rvf::transitions(istat->panel, rvf::weights_for_year(istat->panel, 2001),
                                     rvf::weights_for_year(istat->panel, 2002), 2001, 2002);
    std::vector<Vec2> s, e;
    for (const auto &t : tr) s.push_back(t.start), e.push_back(t.start), e.push_back(t.end);
    const auto g = rvf::EvalGrid::covering(e, rvf::sample_covariance(s), h_star, 50, 50);
    auto f = rvf::estimate_rvf(tr, h_star, a_star, g);
    rvf::annotate_field(f, rvf::bootstrap_fields(tr, h_star, a_star, g, istat_replicates(), 1));
    const auto r = rvf::vertical_ratio(f);
    if (!r) return verdict(false, "no significant nodes");
    return verdict(*r < 0.2, fmt("median |dx|/|dy| = %.4f", *r));
  });

  return failures == 0 ? 0 : 1;
}
