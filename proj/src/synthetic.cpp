#include "rvf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

#include "rvf/csv.hpp"
#include "rvf/error.hpp"

namespace rvf::synthetic {

double uniform(std::mt19937_64 &rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

double normal(std::mt19937_64 &rng) {
  double u1 = 0.0;
  while (u1 <= 0.0) u1 = uniform(rng, 0.0, 1.0);
  const double u2 = uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec2 double_well(const Vec2 &z) { return {0.2 * (z.x - z.x * z.x * z.x / 4.0), -0.2 * z.y}; }

int double_well_basin(const Vec2 &z) { return z.x < 0.0 ? 0 : 1; }

std::vector<Transition> double_well_transitions(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 s{uniform(rng, -3.5, 3.5), uniform(rng, -2.0, 2.0)};
    const Vec2 d = double_well(s) + Vec2{sigma * normal(rng), sigma * normal(rng)};
    out.push_back({i, s, s + d, d, 1});
  }
  return out;
}

std::vector<Transition> noise_transitions(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 s{uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0)};
    const Vec2 d{sigma * normal(rng), sigma * normal(rng)};
    out.push_back({i, s, s + d, d, 1});
  }
  return out;
}

namespace {

std::string numbered(const char *prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf;
}

}  // namespace

PanelFixture make_panel(const PanelSpec &spec) {
  if (spec.last_year <= spec.first_year) throw DomainError("synthetic panel needs at least two years");
  std::mt19937_64 rng(spec.seed);
  const auto ny = static_cast<std::size_t>(spec.last_year - spec.first_year + 1);

  struct Zone {
    double mean;
    double trend;
    std::vector<std::size_t> units;
  };
  std::vector<Zone> zones(spec.zones);
  std::vector<double> area;
  std::vector<std::size_t> zone_of;
  std::vector<std::vector<double>> y;  // unit x year
  for (std::size_t z = 0; z < spec.zones; ++z) {
    auto &zone = zones[z];
    zone.mean = 5.0 + 1.3 * normal(rng);
    zone.trend = 0.004 * (zone.mean - 5.0) + 0.002 * normal(rng);
    const auto span = static_cast<double>(spec.max_zone_size - spec.min_zone_size + 1);
    const auto size = spec.min_zone_size + static_cast<std::size_t>(uniform(rng, 0.0, span));
    for (std::size_t k = 0; k < size; ++k) {
      zone.units.push_back(area.size());
      zone_of.push_back(z);
      area.push_back(std::round(std::exp(std::log(30.0) + 0.6 * normal(rng)) * 100.0) / 100.0);
      y.push_back(std::vector<double>(ny));
      y.back()[0] = zone.mean + 0.6 * normal(rng);
    }
  }

  for (std::size_t t = 1; t < ny; ++t) {
    const int year = spec.first_year + static_cast<int>(t);
    const bool frozen =
        std::find(spec.frozen_years.begin(), spec.frozen_years.end(), year) != spec.frozen_years.end();
    for (const auto &zone : zones) {
      double m = 0.0;
      for (auto u : zone.units) m += y[u][t - 1];
      m /= static_cast<double>(zone.units.size());
      for (auto u : zone.units) {
        const double shock = 0.01 * normal(rng);
        y[u][t] = frozen ? y[u][t - 1] : y[u][t - 1] + 0.03 * (m - y[u][t - 1]) + zone.trend + shock;
      }
    }
  }

  PanelFixture fx;
  const std::size_t n = area.size();
  for (std::size_t u = 0; u < n; ++u) {
    const auto id = numbered("M", u);
    const bool split = spec.split_until > spec.first_year && u % 25 == 3;
    for (std::size_t t = 0; t < ny; ++t) {
      const int year = spec.first_year + static_cast<int>(t);
      const auto pop = std::max<std::int64_t>(1, std::llround(std::exp(y[u][t]) * area[u]));
      if (split && year <= spec.split_until) {
        const std::int64_t a = pop / 2;
        fx.records.push_back({id + "a", year, a, area[u] / 2.0});
        fx.records.push_back({id + "b", year, pop - a, area[u] / 2.0});
      } else {
        fx.records.push_back({id, year, pop, area[u]});
      }
    }
    if (split) {
      fx.crosswalk.mappings.push_back({id + "a", id, spec.first_year, spec.split_until});
      fx.crosswalk.mappings.push_back({id + "b", id, spec.first_year, spec.split_until});
    }
  }
  fx.crosswalk.reference_year = spec.last_year;

  ZonePartition first;
  first.valid_from = spec.first_year;
  first.valid_to = spec.switch_year > spec.first_year ? spec.switch_year - 1 : spec.last_year;
  for (std::size_t u = 0; u < n; ++u) first.zone_of[numbered("M", u)] = numbered("Z", zone_of[u]);
  fx.partitions.push_back(first);

  if (spec.switch_year > spec.first_year && spec.switch_year <= spec.last_year) {
    std::vector<std::size_t> order(spec.zones);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return zones[a].mean < zones[b].mean; });
    std::vector<std::size_t> target(spec.zones);
    std::iota(target.begin(), target.end(), 0);
    const auto pairs = static_cast<std::size_t>(spec.merge_share * static_cast<double>(spec.zones) / 2.0);
    for (std::size_t i = 0; i < pairs; ++i) target[order[spec.zones - 1 - i]] = order[i];
    ZonePartition second;
    second.valid_from = spec.switch_year;
    second.valid_to = spec.last_year;
    for (std::size_t u = 0; u < n; ++u) second.zone_of[numbered("M", u)] = numbered("L", target[zone_of[u]]);
    fx.partitions.push_back(second);
  }
  return fx;
}

void write_fixture(const std::filesystem::path &dir, const PanelFixture &fixture) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "panel.csv");
    out << "unit_id,year,population,area_km2\n";
    for (const auto &r : fixture.records)
      csv::write_row(out, {r.unit_id, std::to_string(r.year), std::to_string(r.population), csv::format(r.area_km2)});
  }
  {
    std::ofstream out(dir / "crosswalk.csv");
    out << "source_unit_id,target_unit_id,year_from,year_to\n";
    for (const auto &m : fixture.crosswalk.mappings)
      csv::write_row(out, {m.source_unit_id, m.target_unit_id, std::to_string(m.year_from), std::to_string(m.year_to)});
  }
  {
    std::ofstream out(dir / "partitions.csv");
    out << "unit_id,zone_id,valid_from,valid_to\n";
    for (const auto &p : fixture.partitions)
      for (const auto &[unit, zone] : p.zone_of)
        csv::write_row(out, {unit, zone, std::to_string(p.valid_from), std::to_string(p.valid_to)});
  }
}

}  // namespace rvf::synthetic
