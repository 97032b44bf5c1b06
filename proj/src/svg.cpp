#include "rvf/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rvf/csv.hpp"

namespace rvf::svg {

std::string num(double v) { return csv::format_sig(v, 6); }

std::string escape(const std::string &text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const std::string &palette(std::size_t i) {
  static const std::array<std::string, 8> colors = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                                    "#66a61e", "#e6ab02", "#a6761d", "#666666"};
  return colors[i % colors.size()];
}

Range extent(std::span<const double> values, double pad) {
  double lo = INFINITY, hi = -INFINITY;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo <= hi)) return {0.0, 1.0};
  if (hi - lo < 1e-12) return {lo - 0.5, hi + 0.5};
  const double p = (hi - lo) * pad;
  return {lo - p, hi + p};
}

std::vector<double> ticks(Range r, int target) {
  const double span = r.hi - r.lo;
  if (!(span > 0.0)) return {r.lo};
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(r.lo / step) * step; t <= r.hi + step * 1e-9; t += step)
    out.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  return out;
}

Plot::Plot(Range x, Range y, double width, double height) : xr_(x), yr_(y), width_(width), height_(height) {
  sx_ = (width_ - left_ - right_) / (xr_.hi - xr_.lo);
  sy_ = (height_ - top_ - bottom_) / (yr_.hi - yr_.lo);
}

void Plot::points(std::span<const Vec2> pts, const std::string &color, double radius_px, const std::string &cls) {
  for (const auto &p : pts) {
    if (!is_finite(p)) continue;
    pixel_ << "<circle class=\"" << cls << "\" cx=\"" << num(px(p.x)) << "\" cy=\"" << num(py(p.y)) << "\" r=\""
           << num(radius_px) << "\" fill=\"" << color << "\" fill-opacity=\"0.6\"/>\n";
  }
}

void Plot::polyline(std::span<const Vec2> pts, const std::string &color, double width_px, const std::string &cls,
                    bool dashed) {
  data_ << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
        << num(width_px) << "\"" << (dashed ? " stroke-dasharray=\"4 3\"" : "") << " points=\"";
  bool first = true;
  for (const auto &p : pts) {
    if (!is_finite(p)) continue;
    data_ << (first ? "" : " ") << num(p.x) << ',' << num(p.y);
    first = false;
  }
  data_ << "\"/>\n";
}

void Plot::band(std::span<const double> x, std::span<const double> lo, std::span<const double> hi,
                const std::string &color, double opacity) {
  data_ << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"" << num(opacity)
        << "\" stroke=\"none\" points=\"";
  bool first = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(lo[i])) continue;
    data_ << (first ? "" : " ") << num(x[i]) << ',' << num(lo[i]);
    first = false;
  }
  for (std::size_t i = x.size(); i-- > 0;) {
    if (!std::isfinite(hi[i])) continue;
    data_ << ' ' << num(x[i]) << ',' << num(hi[i]);
  }
  data_ << "\"/>\n";
}

void Plot::arrow(const Vec2 &from, const Vec2 &v, const std::string &color, const std::string &cls) {
  const Vec2 to = from + v;
  data_ << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\""
        << num(from.x) << ',' << num(from.y) << ' ' << num(to.x) << ',' << num(to.y) << "\"/>\n";
  const Vec2 a{px(from.x), py(from.y)}, b{px(to.x), py(to.y)};
  const double len = distance(a, b);
  if (len < 1.0) return;
  const Vec2 u = (1.0 / len) * (b - a);
  const Vec2 n{-u.y, u.x};
  const double s = std::min(5.0, 0.4 * len);
  const Vec2 l = b - s * u + 0.5 * s * n, r = b - s * u - 0.5 * s * n;
  pixel_ << "<polygon class=\"head\" fill=\"" << color << "\" points=\"" << num(b.x) << ',' << num(b.y)
         << ' ' << num(l.x) << ',' << num(l.y) << ' ' << num(r.x) << ',' << num(r.y) << "\"/>\n";
}

void Plot::circle(const Vec2 &center, double radius, const std::string &color, const std::string &label) {
  data_ << "<ellipse class=\"attractor\" cx=\"" << num(center.x) << "\" cy=\"" << num(center.y) << "\" rx=\""
        << num(radius) << "\" ry=\"" << num(radius) << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2.5\"/>\n";
  if (!label.empty())
    pixel_ << "<text x=\"" << num(px(center.x + radius)) << "\" y=\"" << num(py(center.y + radius))
           << "\" font-size=\"12\" fill=\"" << color << "\">" << escape(label) << "</text>\n";
}

void Plot::legend(const std::string &label, const std::string &color) { legend_.emplace_back(label, color); }

std::string Plot::str() const {
  std::ostringstream s;
  const double pw = width_ - left_ - right_, ph = height_ - top_ - bottom_;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_) << "\" height=\"" << num(height_)
    << "\" viewBox=\"0 0 " << num(width_) << ' ' << num(height_) << "\" font-family=\"sans-serif\">\n";
  s << "<style>polyline,polygon,ellipse{vector-effect:non-scaling-stroke}</style>\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title_.empty())
    s << "<text x=\"" << num(width_ / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title_)
      << "</text>\n";

  s << "<g class=\"axes\" stroke=\"#999\" font-size=\"11\">\n";
  s << "<rect x=\"" << num(left_) << "\" y=\"" << num(top_) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\"/>\n";
  for (double t : ticks(xr_)) {
    s << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(top_ + ph) << "\" x2=\"" << num(px(t)) << "\" y2=\""
      << num(top_ + ph + 5) << "\"/>";
    s << "<text x=\"" << num(px(t)) << "\" y=\"" << num(top_ + ph + 18) << "\" text-anchor=\"middle\" stroke=\"none\">"
      << num(t) << "</text>\n";
  }
  for (double t : ticks(yr_)) {
    s << "<line x1=\"" << num(left_ - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(left_) << "\" y2=\""
      << num(py(t)) << "\"/>";
    s << "<text x=\"" << num(left_ - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\" stroke=\"none\">"
      << num(t) << "</text>\n";
  }
  s << "</g>\n";
  if (!xlabel_.empty())
    s << "<text x=\"" << num(left_ + pw / 2) << "\" y=\"" << num(height_ - 12) << "\" text-anchor=\"middle\" font-size=\"13\">"
      << escape(xlabel_) << "</text>\n";
  if (!ylabel_.empty())
    s << "<text transform=\"translate(16," << num(top_ + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">" << escape(ylabel_) << "</text>\n";

  s << "<clipPath id=\"plot-area\"><rect x=\"" << num(left_) << "\" y=\"" << num(top_) << "\" width=\"" << num(pw)
    << "\" height=\"" << num(ph) << "\"/></clipPath>\n";
  s << "<g clip-path=\"url(#plot-area)\">\n";
  s << "<g class=\"data\" transform=\"matrix(" << num(sx_) << " 0 0 " << num(-sy_) << ' ' << num(left_ - xr_.lo * sx_)
    << ' ' << num(top_ + yr_.hi * sy_) << ")\">\n";
  s << data_.str() << "</g>\n";
  s << pixel_.str() << "</g>\n";

  double ly = top_ + 14;
  for (const auto &[label, color] : legend_) {
    s << "<rect x=\"" << num(left_ + 10) << "\" y=\"" << num(ly - 9) << "\" width=\"10\" height=\"10\" fill=\"" << color
      << "\"/><text x=\"" << num(left_ + 26) << "\" y=\"" << num(ly) << "\" font-size=\"11\">" << escape(label)
      << "</text>\n";
    ly += 16;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace rvf::svg
