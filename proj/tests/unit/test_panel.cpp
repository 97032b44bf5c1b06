#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "rvf/error.hpp"
#include "rvf/moran.hpp"
#include "rvf/panel.hpp"
#include "rvf/synthetic.hpp"
#include "scratch.hpp"

namespace {

rvf::ZonePartition one_zone(const std::vector<std::string> &units, int from, int to) {
  rvf::ZonePartition p;
  for (const auto &u : units) p.zone_of[u] = "Z";
  p.valid_from = from;
  p.valid_to = to;
  return p;
}

rvf::IngestResult metro() {
  const auto dir = testing::source_dir() / "data" / "metro_cities";
  return rvf::ingest_panel(rvf::read_panel_csv(dir / "panel.csv"), rvf::read_crosswalk_csv(dir / "crosswalk.csv"),
                           rvf::read_partitions_csv(dir / "partitions.csv"));
}

}  // namespace

TEST_SUITE("panel") {
  TEST_CASE("merged sources sum population and area") {
    const std::vector<rvf::UnitRecord> records = {
        {"a", 2000, 100, 1.0}, {"b", 2000, 50, 1.0}, {"T", 2001, 160, 2.0}};
    rvf::Crosswalk cw{{{"a", "T", 2000, 2000}, {"b", "T", 2000, 2000}}, 0};
    const auto r = rvf::ingest_panel(records, cw, {one_zone({"T"}, 2000, 2001)});
    REQUIRE(r.panel.unit_count() == 1);
    CHECK(r.panel.population(0, 0) == 150);
    CHECK(r.panel.area(0) == 2.0);
    CHECK(r.panel.log_density(0, 0) == doctest::Approx(std::log(75.0)).epsilon(1e-15));
  }

  TEST_CASE("identity crosswalk gives log of density") {
    const std::vector<rvf::UnitRecord> records = {{"u", 2000, 1000, 10.0}, {"u", 2001, 1000, 10.0}};
    const auto r = rvf::ingest_panel(records, {}, {one_zone({"u"}, 2000, 2001)});
    CHECK(r.panel.log_density(0, 0) == doctest::Approx(4.6052).epsilon(1e-4));
  }

  TEST_CASE("harmonization is idempotent and conserves population") {
    const auto fx = rvf::synthetic::make_panel({.zones = 12, .first_year = 1990, .last_year = 1996, .switch_year = 1994,
                                                .split_until = 1992, .seed = 5});
    const auto once = rvf::harmonize(fx.records, fx.crosswalk);
    const auto twice = rvf::harmonize(once, fx.crosswalk);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      CHECK(once[i].unit_id == twice[i].unit_id);
      CHECK(once[i].population == twice[i].population);
      CHECK(once[i].area_km2 == twice[i].area_km2);
    }
    std::map<int, std::int64_t> before, after;
    for (const auto &r : fx.records) before[r.year] += r.population;
    for (const auto &r : once) after[r.year] += r.population;
    CHECK(before == after);
  }

  TEST_CASE("crosswalk chains resolve and cycles are rejected") {
    const std::vector<rvf::UnitRecord> records = {{"a", 2000, 10, 1.0}, {"c", 2001, 10, 1.0}};
    rvf::Crosswalk chain{{{"a", "b", 2000, 2000}, {"b", "c", 1990, 2005}}, 0};
    const auto out = rvf::harmonize(records, chain);
    REQUIRE(out.size() == 2);
    CHECK(out[0].unit_id == "c");
    rvf::Crosswalk cycle{{{"a", "b", 2000, 2001}, {"b", "a", 2000, 2001}}, 0};
    CHECK_THROWS_AS(rvf::harmonize(records, cycle), rvf::InputError);
    rvf::Crosswalk overlap{{{"a", "c", 1990, 2000}, {"a", "d", 2000, 2005}}, 0};
    CHECK_THROWS_AS(rvf::harmonize(records, overlap), rvf::InputError);
  }

  TEST_CASE("integrity errors") {
    const auto part = one_zone({"u"}, 2000, 2002);
    CHECK_THROWS_AS(rvf::ingest_panel({{"u", 2000, 1, 1.0}, {"u", 2000, 1, 1.0}, {"u", 2001, 1, 1.0}}, {}, {part}),
                    rvf::InputError);
    CHECK_THROWS_AS(rvf::ingest_panel({{"u", 2000, 1, 0.0}, {"u", 2001, 1, 1.0}}, {}, {part}), rvf::InputError);
    CHECK_THROWS_AS(rvf::ingest_panel({{"u", 2000, 1, 1.0}, {"u", 2002, 1, 1.0}}, {}, {part}), rvf::InputError);
    CHECK_THROWS_AS(rvf::ingest_panel({{"u", 2000, 1, 1.0}}, {}, {part}), rvf::InputError);
    CHECK_THROWS_AS(rvf::ingest_panel({{"v", 2000, 1, 1.0}, {"v", 2001, 1, 1.0}}, {}, {part}), rvf::InputError);
    CHECK_THROWS_AS(rvf::ingest_panel({{"u", 2000, 1, 1.0}, {"u", 2001, 1, 1.0}}, {},
                                      {one_zone({"u"}, 2000, 2001), one_zone({"u"}, 2001, 2002)}),
                    rvf::InputError);
  }

  TEST_CASE("dropped plus retained accounts for every unit") {
    const std::vector<rvf::UnitRecord> records = {{"keep", 2000, 5, 1.0}, {"keep", 2001, 6, 1.0},
                                                  {"zero", 2000, 0, 1.0}, {"zero", 2001, 6, 1.0},
                                                  {"gap", 2001, 6, 1.0}};
    const auto r = rvf::ingest_panel(records, {}, {one_zone({"keep", "zero", "gap"}, 2000, 2001)});
    CHECK(r.panel.units() == std::vector<std::string>{"keep"});
    REQUIRE(r.report.dropped.size() == 2);
    std::set<std::string> all(r.panel.units().begin(), r.panel.units().end());
    for (const auto &d : r.report.dropped) all.insert(d.unit_id);
    CHECK(all == std::set<std::string>{"keep", "zero", "gap"});
    CHECK(r.report.warnings.size() == 1);
  }

  TEST_CASE("window selection") {
    const auto r = metro();
    CHECK(r.panel.year_count() == 36);
    const auto w = rvf::select_window(r.panel, 2001, 2002);
    CHECK(w.year_count() == 2);
    CHECK(w.unit_count() == r.panel.unit_count());
    CHECK_THROWS_AS(rvf::select_window(r.panel, 2020, 2021), rvf::DomainError);
    CHECK_THROWS_AS(rvf::select_window(r.panel, 2002, 2002), rvf::DomainError);
  }

  TEST_CASE("metropolitan fixture round-trips the published values") {
    const auto r = metro();
    const auto rome = r.panel.find_unit("Rome");
    REQUIRE(rome);
    const auto t = r.panel.year_index(1984);
    CHECK(r.panel.population(*rome, t) == 2844903);
    CHECK(std::round(r.panel.log_density(*rome, t) * 100.0) / 100.0 == 7.70);
    const auto milan = r.panel.find_unit("Milan");
    REQUIRE(milan);
    const auto w = rvf::weights_for_year(r.panel, 1984);
    const auto pts = rvf::to_moran(r.panel, w, 1984);
    bool found = false;
    for (const auto &p : pts)
      if (p.unit == *milan) {
        found = true;
        CHECK(std::round(p.own * 100.0) / 100.0 == 9.06);
      }
    CHECK(found);
  }
}
