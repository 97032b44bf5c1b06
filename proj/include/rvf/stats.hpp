#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace rvf::stats {

/// Linear-interpolation quantile (R type 7). Takes a copy; NaNs must be
/// filtered by the caller.
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Population variance (divides by n).
inline double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation (divides by n - 1).
inline double sample_sd(std::span<const double> v) {
  return std::sqrt(variance(v) * static_cast<double>(v.size()) / static_cast<double>(v.size() - 1));
}

}  // namespace rvf::stats
