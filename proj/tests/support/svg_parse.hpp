#pragma once

#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "rvf/geometry.hpp"

namespace testing {

struct Shaft {
  std::string cls;
  rvf::Vec2 from, to;
};

/// Two-point polylines whose class list contains "arrow".
inline std::vector<Shaft> arrow_shafts(const std::string &svg) {
  static const std::regex re(R"re(<polyline class="([^"]*\barrow\b[^"]*)"[^>]*points="([^"]*)")re");
  std::vector<Shaft> out;
  for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) {
    std::string pts = (*it)[2];
    for (char &c : pts)
      if (c == ',') c = ' ';
    std::istringstream in(pts);
    Shaft s{(*it)[1], {}, {}};
    in >> s.from.x >> s.from.y >> s.to.x >> s.to.y;
    out.push_back(s);
  }
  return out;
}

}  // namespace testing
