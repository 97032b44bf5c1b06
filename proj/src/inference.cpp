#include "rvf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "rvf/csv.hpp"
#include "rvf/error.hpp"
#include "rvf/parallel.hpp"
#include "rvf/stats.hpp"

namespace rvf {

std::size_t BootstrapEnsemble::degenerate_count() const {
  return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
}

std::vector<std::vector<std::size_t>> bootstrap_resamples(std::size_t n, std::size_t replicates, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> out(replicates, std::vector<std::size_t>(n));
  for (std::size_t b = 0; b < replicates; ++b) {
    auto rng = replicate_rng(seed, b);
    for (auto &i : out[b]) i = uniform_index(rng, n);
  }
  return out;
}

BootstrapEnsemble bootstrap_fields_from(const std::vector<Transition> &transitions, double h, double alpha,
                                        const EvalGrid &grid, const std::vector<std::vector<std::size_t>> &resamples,
                                        const RvfOptions &options) {
  if (transitions.size() < 3) throw DomainError("bootstrap needs at least 3 transitions");
  const int horizon = transitions.front().horizon;
  BootstrapEnsemble ens;
  ens.replicates = resamples.size();
  ens.fields.resize(resamples.size());
  ens.degenerate.assign(resamples.size(), 0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t b = 0; b < resamples.size(); ++b) {
    std::vector<Vec2> starts, deltas;
    starts.reserve(resamples[b].size());
    deltas.reserve(resamples[b].size());
    for (auto i : resamples[b]) {
      starts.push_back(transitions[i].start);
      deltas.push_back(transitions[i].delta);
    }
    try {
      const RvfEstimator est(starts, deltas, h, alpha, options);
      VectorFieldGrid f;
      f.grid = grid;
      f.horizon = horizon;
      const std::size_t n = grid.size();
      f.arrows.resize(n);
      f.mass.resize(n);
      f.effective_n.resize(n);
      f.direction_variance.assign(n, std::nan(""));
      f.significant.assign(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto e = est.at(grid.node(i));
        f.arrows[i] = e.arrow;
        f.mass[i] = e.mass;
        f.effective_n[i] = e.effective_n;
      }
      ens.fields[b] = std::move(f);
    } catch (const DomainError &) {
      ens.degenerate[b] = 1;
      VectorFieldGrid f;
      f.grid = grid;
      f.horizon = horizon;
      f.arrows.assign(grid.size(), Vec2{std::nan(""), std::nan("")});
      f.mass.assign(grid.size(), 0.0);
      f.effective_n.assign(grid.size(), 0.0);
      f.direction_variance.assign(grid.size(), std::nan(""));
      f.significant.assign(grid.size(), 0);
      ens.fields[b] = std::move(f);
    }
  }
  return ens;
}

BootstrapEnsemble bootstrap_fields(const std::vector<Transition> &transitions, double h, double alpha,
                                   const EvalGrid &grid, std::size_t replicates, std::uint64_t seed,
                                   const RvfOptions &options) {
  auto ens = bootstrap_fields_from(transitions, h, alpha, grid,
                                   bootstrap_resamples(transitions.size(), replicates, seed), options);
  ens.seed = seed;
  return ens;
}

double significance_threshold(double level, double effective_n) {
  if (std::isinf(effective_n)) return -2.0 * std::log(level);
  if (!(effective_n > 3.0)) return INFINITY;
  // Hotelling T^2 with two components: 2(n-1)/(n-2) F(2, n-2), where the
  // F(2, nu) quantile is nu/2 (level^(-2/nu) - 1).
  const double nu = effective_n - 2.0;
  const double f = 0.5 * nu * (std::pow(level, -2.0 / nu) - 1.0);
  return 2.0 * (effective_n - 1.0) / nu * f;
}

bool node_significant(const std::vector<Vec2> &arrows, const SignificanceOptions &options, double effective_n) {
  if (arrows.size() < std::max<std::size_t>(options.min_replicates, 2)) return false;
  const double threshold = significance_threshold(options.level, effective_n);
  if (std::isinf(threshold)) return false;
  const double n = static_cast<double>(arrows.size());
  Vec2 m;
  for (const auto &a : arrows) m += a;
  m = m / n;
  Sym2 c;
  for (const auto &a : arrows) {
    const Vec2 d = a - m;
    c.xx += d.x * d.x;
    c.xy += d.x * d.y;
    c.yy += d.y * d.y;
  }
  c.xx /= n - 1.0;
  c.xy /= n - 1.0;
  c.yy /= n - 1.0;

  const double tr = c.trace();
  if (tr > 0.0 && c.det() > 1e-12 * tr * tr) return c.inverse().quad(m) > threshold;
  std::vector<double> xs, ys;
  for (const auto &a : arrows) {
    xs.push_back(a.x);
    ys.push_back(a.y);
  }
  const double lo_q = options.level / 2.0, hi_q = 1.0 - options.level / 2.0;
  auto excludes_zero = [&](const std::vector<double> &v) {
    const double lo = stats::quantile(v, lo_q), hi = stats::quantile(v, hi_q);
    return lo > 0.0 || hi < 0.0;
  };
  return excludes_zero(xs) || excludes_zero(ys);
}

namespace {

std::vector<Vec2> node_arrows(const BootstrapEnsemble &ens, std::size_t node) {
  std::vector<Vec2> out;
  for (std::size_t b = 0; b < ens.fields.size(); ++b)
    if (!ens.degenerate[b] && !ens.fields[b].is_empty(node)) out.push_back(ens.fields[b].arrows[node]);
  return out;
}

double node_support(std::span<const double> effective_n, const SignificanceOptions &options, std::size_t i) {
  if (!options.small_sample || effective_n.empty()) return INFINITY;
  return effective_n[i];
}

}  // namespace

std::vector<std::uint8_t> flag_significance(const BootstrapEnsemble &ensemble, std::span<const double> effective_n,
                                            const SignificanceOptions &options) {
  if (ensemble.fields.empty()) return {};
  const std::size_t n = ensemble.fields.front().grid.size();
  if (!effective_n.empty() && effective_n.size() != n) throw DomainError("effective sizes do not match the grid");
  std::vector<std::uint8_t> out(n, 0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i)
    out[i] = node_significant(node_arrows(ensemble, i), options, node_support(effective_n, options, i)) ? 1 : 0;
  return out;
}

void annotate_field(VectorFieldGrid &field, const BootstrapEnsemble &ensemble, const SignificanceOptions &options) {
  if (ensemble.fields.empty()) return;
  const std::size_t n = field.grid.size();
  if (ensemble.fields.front().grid.size() != n) throw DomainError("ensemble grid does not match field grid");
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const auto arrows = node_arrows(ensemble, i);
    const double support = node_support(field.effective_n, options, i);
    field.significant[i] = !field.is_empty(i) && node_significant(arrows, options, support) ? 1 : 0;
    try {
      field.direction_variance[i] = direction_variance(arrows);
    } catch (const DomainError &) {
      field.direction_variance[i] = std::nan("");
    }
  }
}

std::vector<std::vector<std::size_t>> single_linkage(const std::vector<Vec2> &points, double radius) {
  const std::size_t n = points.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  std::map<std::pair<long, long>, std::vector<std::size_t>> cells;
  auto cell_of = [&](const Vec2 &p) {
    return std::pair{static_cast<long>(std::floor(p.x / radius)), static_cast<long>(std::floor(p.y / radius))};
  };
  for (std::size_t i = 0; i < n; ++i) cells[cell_of(points[i])].push_back(i);
  for (const auto &[cell, members] : cells) {
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        auto it = cells.find({cell.first + dx, cell.second + dy});
        if (it == cells.end()) continue;
        for (auto i : members)
          for (auto j : it->second)
            if (i < j && distance(points[i], points[j]) <= radius) unite(i, j);
      }
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto &[root, members] : groups) out.push_back(std::move(members));
  return out;
}

std::vector<std::string> default_labels(std::size_t count) {
  if (count == 3) return {"rural", "suburban", "urban"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back("A" + std::to_string(i + 1));
  return out;
}

int assign_to_attractor(const std::vector<Attractor> &attractors, const Vec2 &z, double assign_factor) {
  int best = -1;
  double best_d = 0.0;
  for (std::size_t a = 0; a < attractors.size(); ++a) {
    const double d = distance(z, attractors[a].center);
    if (d > assign_factor * attractors[a].radius) continue;
    if (best < 0 || d < best_d) {
      best = static_cast<int>(a);
      best_d = d;
    }
  }
  return best;
}

namespace {

bool point_less(const Vec2 &a, const Vec2 &b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

Vec2 medoid(const std::vector<Vec2> &pts, const std::vector<std::size_t> &members) {
  std::vector<double> cost(members.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t a = 0; a < members.size(); ++a) {
    double s = 0.0;
    for (auto j : members) s += distance(pts[members[a]], pts[j]);
    cost[a] = s;
  }
  std::size_t best = 0;
  for (std::size_t a = 1; a < members.size(); ++a) {
    const Vec2 &p = pts[members[a]], &q = pts[members[best]];
    if (cost[a] < cost[best] || (cost[a] == cost[best] && point_less(p, q))) best = a;
  }
  return pts[members[best]];
}

}  // namespace

AttractorSearch find_attractors(const VectorFieldGrid &field, const std::vector<Vec2> &starts,
                                const AttractorOptions &options) {
  if (starts.empty()) throw DomainError("no start points");
  AttractorSearch out;
  IntegrateOptions io;
  io.step = options.step;
  io.stop_tolerance = options.stop_tolerance;
  io.record_every = static_cast<std::size_t>(-1);
  out.terminals.resize(starts.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < starts.size(); ++i) out.terminals[i] = integrate(field, starts[i], options.horizon, io).terminal;

  const auto clusters = single_linkage(out.terminals, options.merge_radius);
  const double n = static_cast<double>(starts.size());
  for (const auto &members : clusters) {
    if (static_cast<double>(members.size()) < options.min_share * n) continue;
    Attractor a;
    a.center = medoid(out.terminals, members);
    std::vector<double> d;
    for (auto j : members) d.push_back(distance(out.terminals[j], a.center));
    a.radius = std::max(stats::quantile(d, 0.95), options.min_radius);
    a.members = members.size();
    out.attractors.push_back(a);
  }
  if (out.attractors.empty()) throw DomainError("no cluster of terminal points reaches the minimum share");

  std::sort(out.attractors.begin(), out.attractors.end(),
            [](const Attractor &a, const Attractor &b) { return point_less(a.center, b.center); });
  // Keep circles disjoint.
  for (std::size_t a = 0; a < out.attractors.size(); ++a) {
    for (std::size_t b = a + 1; b < out.attractors.size(); ++b) {
      auto &A = out.attractors[a];
      auto &B = out.attractors[b];
      const double d = distance(A.center, B.center);
      if (A.radius + B.radius >= d) {
        const double s = 0.999 * d / (A.radius + B.radius);
        A.radius *= s;
        B.radius *= s;
      }
    }
  }
  auto labels = options.labels.size() == out.attractors.size() ? options.labels
                                                               : default_labels(out.attractors.size());
  for (std::size_t a = 0; a < out.attractors.size(); ++a) {
    out.attractors[a].id = a;
    out.attractors[a].label = labels[a];
  }
  out.assignment.resize(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i)
    out.assignment[i] = assign_to_attractor(out.attractors, out.terminals[i], options.assign_factor);
  return out;
}

int AttractorReport::modal_class(std::size_t k) const {
  int best = -1;
  double best_p = unresolved[k];
  for (std::size_t a = 0; a < attractors.size(); ++a) {
    if (probability[k][a] > best_p) {
      best = static_cast<int>(a);
      best_p = probability[k][a];
    }
  }
  return best;
}

AttractorReport basin_probabilities(const BootstrapEnsemble &ensemble, const AttractorSearch &search,
                                    const std::vector<Vec2> &starts, const std::vector<std::size_t> &units,
                                    const std::vector<double> &population, const AttractorOptions &options) {
  if (starts.size() != units.size() || starts.size() != population.size())
    throw DomainError("starts, units and population differ in length");
  if (search.assignment.size() != starts.size()) throw DomainError("attractor search does not match starts");
  const auto &attractors = search.attractors;
  const std::size_t na = attractors.size();
  const std::size_t n = starts.size();

  std::vector<std::size_t> used;
  for (std::size_t b = 0; b < ensemble.fields.size(); ++b)
    if (!ensemble.degenerate[b]) used.push_back(b);

  IntegrateOptions io;
  io.step = options.step;
  io.stop_tolerance = options.stop_tolerance;
  io.record_every = static_cast<std::size_t>(-1);
  std::vector<int> assign(used.size() * n, -1);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t flat = 0; flat < assign.size(); ++flat) {
    const auto &field = ensemble.fields[used[flat / n]];
    const auto k = flat % n;
    const Vec2 end = integrate(field, starts[k], options.horizon, io).terminal;
    assign[flat] = assign_to_attractor(attractors, end, options.assign_factor);
  }

  AttractorReport rep;
  rep.attractors = attractors;
  rep.units = units;
  rep.replicates_used = used.size();
  rep.point_assignment = search.assignment;
  rep.probability.assign(n, std::vector<double>(na, 0.0));
  rep.unresolved.assign(n, 0.0);
  const double nb = static_cast<double>(used.size());
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::size_t> counts(na, 0);
    for (std::size_t r = 0; r < used.size(); ++r) {
      const int a = assign[r * n + k];
      if (a >= 0) ++counts[static_cast<std::size_t>(a)];
    }
    double s = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      rep.probability[k][a] = used.empty() ? 0.0 : static_cast<double>(counts[a]) / nb;
      s += rep.probability[k][a];
    }
    rep.unresolved[k] = 1.0 - s;
  }

  const double total_pop = std::accumulate(population.begin(), population.end(), 0.0);
  auto shares_of = [&](auto assigned_of) {
    std::vector<double> unit_share(na + 1, 0.0), pop_share(na + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const int a = assigned_of(k);
      const std::size_t slot = a < 0 ? na : static_cast<std::size_t>(a);
      unit_share[slot] += 1.0;
      pop_share[slot] += population[k];
    }
    for (auto &v : unit_share) v /= static_cast<double>(n);
    for (auto &v : pop_share) v = total_pop > 0.0 ? v / total_pop : 0.0;
    return std::pair{unit_share, pop_share};
  };

  const auto [point_units, point_pop] = shares_of([&](std::size_t k) { return search.assignment[k]; });
  std::vector<std::vector<double>> rep_units(na + 1), rep_pop(na + 1);
  for (std::size_t r = 0; r < used.size(); ++r) {
    const auto [u, p] = shares_of([&](std::size_t k) { return assign[r * n + k]; });
    for (std::size_t a = 0; a <= na; ++a) {
      rep_units[a].push_back(u[a]);
      rep_pop[a].push_back(p[a]);
    }
  }
  auto band = [&](double point, const std::vector<double> &reps) {
    ShareBand s;
    s.point = point;
    if (reps.empty()) {
      s.mean = s.lo = s.hi = point;
      return s;
    }
    s.mean = stats::mean(reps);
    s.lo = stats::quantile(reps, 0.05);
    s.hi = stats::quantile(reps, 0.95);
    return s;
  };
  for (std::size_t a = 0; a < na; ++a) {
    rep.unit_share.push_back(band(point_units[a], rep_units[a]));
    rep.population_share.push_back(band(point_pop[a], rep_pop[a]));
  }
  rep.unresolved_unit_share = band(point_units[na], rep_units[na]);
  rep.unresolved_population_share = band(point_pop[na], rep_pop[na]);
  return rep;
}

nlohmann::json report_json(const AttractorReport &report, const std::vector<std::string> &unit_ids) {
  using nlohmann::json;
  auto share_json = [](const ShareBand &s) {
    return json{{"point", s.point}, {"mean", s.mean}, {"lo", s.lo}, {"hi", s.hi}};
  };
  json j;
  j["schema_version"] = "1.0";
  j["attractors"] = json::array();
  for (std::size_t a = 0; a < report.attractors.size(); ++a) {
    const auto &at = report.attractors[a];
    j["attractors"].push_back({{"id", at.id},
                               {"label", at.label},
                               {"center", {at.center.x, at.center.y}},
                               {"radius", at.radius},
                               {"members", at.members},
                               {"municipality_share", share_json(report.unit_share[a])},
                               {"population_share", share_json(report.population_share[a])}});
  }
  j["unresolved"] = {{"municipality_share", share_json(report.unresolved_unit_share)},
                     {"population_share", share_json(report.unresolved_population_share)}};
  j["bootstrap"] = {{"replicates_used", report.replicates_used}, {"band_level", report.band_level}};
  j["units"] = json::array();
  for (std::size_t k = 0; k < report.units.size(); ++k) {
    const int modal = report.modal_class(k);
    const int point = report.point_assignment[k];
    j["units"].push_back({{"unit_id", unit_ids.at(report.units[k])},
                          {"probabilities", report.probability[k]},
                          {"unresolved", report.unresolved[k]},
                          {"modal", modal < 0 ? json(nullptr) : json(report.attractors[modal].label)},
                          {"point", point < 0 ? json(nullptr) : json(report.attractors[point].label)}});
  }
  return j;
}

OverlayTable policy_overlay(const AttractorReport &report, const std::vector<std::string> &unit_ids,
                            const std::vector<double> &population, const std::map<std::string, bool> &membership) {
  OverlayTable table;
  const std::size_t na = report.attractors.size();
  std::vector<std::string> classes;
  for (const auto &a : report.attractors) classes.push_back(a.label);
  classes.push_back("unresolved");
  for (const auto &c : classes) {
    table.cells.push_back({c, true, 0, 0.0});
    table.cells.push_back({c, false, 0, 0.0});
  }
  std::map<std::string, std::size_t> present;
  for (std::size_t k = 0; k < report.units.size(); ++k) {
    const auto &id = unit_ids.at(report.units[k]);
    present.emplace(id, k);
    const int m = report.modal_class(k);
    const std::size_t cls = m < 0 ? na : static_cast<std::size_t>(m);
    auto it = membership.find(id);
    const bool flagged = it != membership.end() && it->second;
    auto &cell = table.cells[2 * cls + (flagged ? 0 : 1)];
    ++cell.n_units;
    cell.population += population.at(k);
  }
  for (const auto &[id, flag] : membership)
    if (!present.count(id)) table.unknown_ids.push_back(id);
  return table;
}

std::map<std::string, bool> read_membership_csv(const std::filesystem::path &path) {
  const auto t = csv::read(path, {"unit_id", "program_flag"});
  std::map<std::string, bool> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    std::string v = t.rows[r][1];
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    bool flag;
    if (v == "1" || v == "true" || v == "yes") flag = true;
    else if (v == "0" || v == "false" || v == "no") flag = false;
    else throw InputError(path.string() + ":" + std::to_string(t.lines[r]) + ": invalid program_flag '" + v + "'");
    out[t.rows[r][0]] = flag;
  }
  return out;
}

void write_overlay_csv(std::ostream &out, const OverlayTable &table) {
  out << "attractor,program_flag,n_units,population\n";
  for (const auto &c : table.cells)
    csv::write_row(out, {c.attractor, c.program_flag ? "1" : "0", std::to_string(c.n_units), csv::format(c.population)});
}

}  // namespace rvf
