#pragma once

#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rvf/geometry.hpp"

namespace rvf::svg {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

/// Smallest range holding every finite value, widened by `pad` of its span
/// on both sides. A degenerate span is widened to +-0.5.
Range extent(std::span<const double> values, double pad = 0.05);

/// Tick positions at 1, 2 or 5 times a power of ten.
std::vector<double> ticks(Range r, int target = 6);

/// A single chart. Lines, arrow shafts and circles live in a group whose
/// transform maps data coordinates to pixels, so their attributes hold raw
/// data values; markers, arrowheads and text are placed in pixels. Numbers
/// are written with 6 significant digits.
class Plot {
 public:
  Plot(Range x, Range y, double width = 720.0, double height = 540.0);

  void title(const std::string &text) { title_ = text; }
  void axis_labels(const std::string &x, const std::string &y) {
    xlabel_ = x;
    ylabel_ = y;
  }

  void points(std::span<const Vec2> pts, const std::string &color, double radius_px = 2.0,
              const std::string &cls = "point");
  void polyline(std::span<const Vec2> pts, const std::string &color, double width_px = 1.5,
                const std::string &cls = "line", bool dashed = false);
  /// Filled region between two curves sampled at the same abscissae.
  void band(std::span<const double> x, std::span<const double> lo, std::span<const double> hi,
            const std::string &color, double opacity = 0.2);
  /// Shaft from `from` to `from + v`, plus a pixel-space head.
  void arrow(const Vec2 &from, const Vec2 &v, const std::string &color, const std::string &cls = "arrow");
  void circle(const Vec2 &center, double radius, const std::string &color, const std::string &label = {});
  void legend(const std::string &label, const std::string &color);

  std::string str() const;

  double px(double x) const { return left_ + (x - xr_.lo) * sx_; }
  double py(double y) const { return top_ + (yr_.hi - y) * sy_; }

 private:
  Range xr_, yr_;
  double width_, height_;
  double left_ = 70.0, right_ = 20.0, top_ = 40.0, bottom_ = 55.0;
  double sx_, sy_;
  std::string title_, xlabel_, ylabel_;
  std::ostringstream data_, pixel_;
  std::vector<std::pair<std::string, std::string>> legend_;
};

std::string num(double v);
std::string escape(const std::string &text);

/// Categorical colors; index wraps.
const std::string &palette(std::size_t i);

}  // namespace rvf::svg
