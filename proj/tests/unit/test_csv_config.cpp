#include <cmath>
#include <sstream>

#include "doctest.h"
#include "rvf/config.hpp"
#include "rvf/csv.hpp"
#include "rvf/error.hpp"
#include "scratch.hpp"

TEST_SUITE("csv") {
  TEST_CASE("columns are reordered to the required list") {
    std::istringstream in("area_km2,unit_id,extra,year\n1.5,A,x,2001\n2.5,\"B, c\",y,2002\n");
    const auto t = rvf::csv::parse(in, {"unit_id", "year", "area_km2"}, "mem");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == std::vector<std::string>{"A", "2001", "1.5"});
    CHECK(t.rows[1][0] == "B, c");
    CHECK(t.lines == std::vector<std::size_t>{2, 3});
  }

  TEST_CASE("missing column and short rows are input errors") {
    std::istringstream a("unit_id,year\nA,1\n");
    CHECK_THROWS_AS(rvf::csv::parse(a, {"unit_id", "population"}, "mem"), rvf::InputError);
    std::istringstream b("unit_id,year\nA\n");
    CHECK_THROWS_AS(rvf::csv::parse(b, {"unit_id", "year"}, "mem"), rvf::InputError);
    std::istringstream c("");
    CHECK_THROWS_AS(rvf::csv::parse(c, {"unit_id"}, "mem"), rvf::InputError);
  }

  TEST_CASE("numeric fields") {
    CHECK(rvf::csv::to_int("42", "year", 3) == 42);
    CHECK(rvf::csv::to_double("1e-3", "area", 3) == 0.001);
    CHECK_THROWS_AS(rvf::csv::to_int("4.2", "year", 3), rvf::InputError);
    CHECK_THROWS_AS(rvf::csv::to_double("abc", "area", 3), rvf::InputError);
  }

  TEST_CASE("shortest format round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 0.0}) {
      const auto s = rvf::csv::format(v);
      CHECK(std::stod(s) == v);
    }
    CHECK(rvf::csv::format(0.1) == "0.1");
    CHECK(rvf::csv::format_sig(1.0 / 3.0, 6) == "0.333333");
  }

  TEST_CASE("written rows quote separators") {
    std::ostringstream out;
    rvf::csv::write_row(out, {"a", "b,c", "say \"hi\""});
    CHECK(out.str() == "a,\"b,c\",\"say \"\"hi\"\"\"\n");
  }
}

TEST_SUITE("config") {
  TEST_CASE("keys, comments, arrays and relative paths") {
    const auto c = rvf::parse_config(R"(# run
[inputs]
panel = "panel.csv"   # trailing
partitions = 'parts#1.csv'
window = "2001:2002"
grid = "30x20"
h = 0.21
alpha = 0.0067
B = 100
tune = false
tune_h = [0.1, 0.2]
labels = ["low", "high"]
)",
                                     "/data");
    CHECK(c.panel == std::filesystem::path("/data/panel.csv"));
    CHECK(c.partitions == std::filesystem::path("/data/parts#1.csv"));
    CHECK(*c.window_start == 2001);
    CHECK(*c.window_end == 2002);
    CHECK(c.grid_nx == 30);
    CHECK(c.grid_ny == 20);
    CHECK(*c.h == 0.21);
    CHECK(*c.alpha == 0.0067);
    CHECK(c.replicates == 100);
    CHECK(c.tune_h == std::vector<double>{0.1, 0.2});
    CHECK(c.labels == std::vector<std::string>{"low", "high"});
  }

  TEST_CASE("malformed settings are rejected") {
    CHECK_THROWS_AS(rvf::parse_config("bogus = 1"), rvf::InputError);
    CHECK_THROWS_AS(rvf::parse_config("h 0.2"), rvf::InputError);
    CHECK_THROWS_AS(rvf::parse_config("h = fast"), rvf::InputError);
    CHECK_THROWS_AS(rvf::parse_config("B = -3"), rvf::InputError);
    CHECK_THROWS_AS(rvf::parse_config("tune = maybe"), rvf::InputError);
    CHECK_THROWS_AS(rvf::parse_window("2002:2001"), rvf::InputError);
    CHECK_THROWS_AS(rvf::parse_grid("1x10"), rvf::InputError);
    CHECK_THROWS_AS(rvf::parse_grid("10"), rvf::InputError);
  }

  TEST_CASE("validation") {
    testing::ScratchDir dir("config");
    testing::write_text(dir / "p.csv", "x\n");
    rvf::RunConfig c;
    c.panel = dir / "p.csv";
    c.partitions = dir / "p.csv";
    CHECK_NOTHROW(c.validate(false));
    CHECK_THROWS_AS(c.validate(true), rvf::InputError);
    c.tune = true;
    CHECK_NOTHROW(c.validate(true));
    c.tune = false;
    c.h = 0.2;
    c.alpha = 1.0;
    CHECK_THROWS_AS(c.validate(true), rvf::InputError);
    c.alpha = 0.5;
    CHECK_NOTHROW(c.validate(true));
    c.crosswalk = dir / "absent.csv";
    CHECK_THROWS_AS(c.validate(true), rvf::InputError);
    c.crosswalk.clear();
    c.significance_level = 1.5;
    CHECK_THROWS_AS(c.validate(true), rvf::InputError);
  }

  TEST_CASE("overrides use config syntax") {
    rvf::RunConfig c;
    rvf::apply_setting(c, "window", "1990:1995");
    rvf::apply_setting(c, "seed", "9");
    CHECK(*c.window_start == 1990);
    CHECK(c.seed == 9);
  }
}
