#include <string>

#include "doctest.h"
#include "rvf/svg.hpp"
#include "svg_parse.hpp"

using rvf::Vec2;

TEST_SUITE("svg") {
  TEST_CASE("ticks fall on 1-2-5 steps inside the range") {
    CHECK(rvf::svg::ticks({0.0, 10.0}, 5) == std::vector<double>{0, 2, 4, 6, 8, 10});
    const auto small = rvf::svg::ticks({-0.31, 0.31}, 7);
    REQUIRE(small.size() == 7);
    for (std::size_t k = 0; k < small.size(); ++k) CHECK(small[k] == doctest::Approx(-0.3 + 0.1 * k));
    const auto r = rvf::svg::extent(std::vector<double>{1.0, 3.0, NAN}, 0.5);
    CHECK(r.lo == 0.0);
    CHECK(r.hi == 4.0);
    const auto flat = rvf::svg::extent(std::vector<double>{2.0, 2.0});
    CHECK(flat.lo < 2.0);
    CHECK(flat.hi > 2.0);
  }

  TEST_CASE("arrow shafts are written in data coordinates") {
    rvf::svg::Plot plot({0.0, 10.0}, {-5.0, 5.0});
    plot.arrow({1.0, 2.0}, {0.125, -0.5}, "#000000");
    plot.arrow({3.0, -1.0}, {1e-7, 0.0}, "#000000", "arrow significant");
    const auto s = plot.str();
    const auto shafts = testing::arrow_shafts(s);
    REQUIRE(shafts.size() == 2);
    CHECK(shafts[0].from == Vec2{1.0, 2.0});
    CHECK(shafts[0].to == Vec2{1.125, 1.5});
    CHECK(shafts[1].cls == "arrow significant");
    CHECK(s.find("matrix(") != std::string::npos);
    CHECK(s.find("clip-path") != std::string::npos);
  }

  TEST_CASE("pixel mapping flips the vertical axis") {
    rvf::svg::Plot plot({0.0, 1.0}, {0.0, 1.0});
    CHECK(plot.px(0.0) < plot.px(1.0));
    CHECK(plot.py(0.0) > plot.py(1.0));
  }

  TEST_CASE("text is escaped and numbers use six significant digits") {
    rvf::svg::Plot plot({0.0, 1.0}, {0.0, 1.0});
    plot.title("a < b & \"c\"");
    const auto s = plot.str();
    CHECK(s.find("a &lt; b &amp; &quot;c&quot;") != std::string::npos);
    CHECK(rvf::svg::num(3.14159265) == "3.14159");
  }
}
