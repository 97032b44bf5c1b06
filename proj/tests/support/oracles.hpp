#pragma once

// Direct, unoptimized reference implementations. They share no code with the
// library beyond plain value types.

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "rvf/geometry.hpp"

namespace oracle {

using rvf::Vec2;

struct Cov {
  double xx, xy, yy;
};

inline Cov covariance(const std::vector<Vec2> &p) {
  const double n = static_cast<double>(p.size());
  double mx = 0, my = 0;
  for (const auto &v : p) {
    mx += v.x;
    my += v.y;
  }
  mx /= n;
  my /= n;
  Cov c{0, 0, 0};
  for (const auto &v : p) {
    c.xx += (v.x - mx) * (v.x - mx);
    c.xy += (v.x - mx) * (v.y - my);
    c.yy += (v.y - my) * (v.y - my);
  }
  c.xx /= n - 1;
  c.xy /= n - 1;
  c.yy /= n - 1;
  return c;
}

inline double mahalanobis2(const Cov &c, const Vec2 &d) {
  const double det = c.xx * c.yy - c.xy * c.xy;
  return (c.yy * d.x * d.x - 2 * c.xy * d.x * d.y + c.xx * d.y * d.y) / det;
}

inline double epan(double u) { return u <= 1.0 ? 2.0 / std::numbers::pi * (1.0 - u) : 0.0; }

/// Adaptive density pieces computed with plain double loops.
struct Adaptive {
  std::vector<Vec2> pts;
  Cov cov;
  double h;
  std::vector<double> lambda;

  Adaptive(std::vector<Vec2> points, double h_, double alpha) : pts(std::move(points)), h(h_) {
    cov = covariance(pts);
    const std::size_t n = pts.size();
    std::vector<double> pilot(n);
    for (std::size_t i = 0; i < n; ++i) pilot[i] = fixed(pts[i]);
    double logsum = 0;
    for (double f : pilot) logsum += std::log(f);
    const double g = std::exp(logsum / static_cast<double>(n));
    for (double f : pilot) lambda.push_back(std::pow(f / g, -alpha));
  }

  double fixed(const Vec2 &z) const {
    const double det = cov.xx * cov.yy - cov.xy * cov.xy;
    double s = 0;
    for (const auto &p : pts) s += epan(mahalanobis2(cov, z - p) / (h * h));
    return s / (std::sqrt(det) * static_cast<double>(pts.size()) * h * h);
  }

  double contribution(std::size_t j, const Vec2 &z) const {
    const double det = cov.xx * cov.yy - cov.xy * cov.xy;
    const double hl = h * lambda[j];
    return epan(mahalanobis2(cov, z - pts[j]) / (hl * hl)) /
           (std::sqrt(det) * static_cast<double>(pts.size()) * hl * hl);
  }

  double operator()(const Vec2 &z) const {
    double s = 0;
    for (std::size_t j = 0; j < pts.size(); ++j) s += contribution(j, z);
    return s;
  }
};

/// Kernel-weighted mean of deltas at z; NaN when no sample has weight.
inline Vec2 rvf_arrow(const Adaptive &a, const std::vector<Vec2> &deltas, const Vec2 &z) {
  double total = 0;
  Vec2 acc;
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    const double c = a.contribution(j, z);
    total += c;
    acc = acc + c * deltas[j];
  }
  if (!(total > 0)) return {std::nan(""), std::nan("")};
  return (1.0 / total) * acc;
}

/// Dense row-standardized zone weights, zero diagonal.
inline std::vector<std::vector<double>> dense_weights(const std::vector<std::string> &zone) {
  const std::size_t n = zone.size();
  std::map<std::string, double> size;
  for (const auto &z : zone) size[z] += 1;
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && zone[i] == zone[j]) w[i][j] = 1.0 / (size[zone[i]] - 1);
  return w;
}

inline std::vector<double> lag(const std::vector<std::vector<double>> &w, const std::vector<double> &y) {
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) out[i] += w[i][j] * y[j];
  return out;
}

/// Moran's I over the index subset `keep`, with W restricted to it.
inline double morans_i(const std::vector<std::vector<double>> &w, const std::vector<double> &y,
                       const std::vector<std::size_t> &keep) {
  const double n = static_cast<double>(keep.size());
  double mean = 0;
  for (auto i : keep) mean += y[i];
  mean /= n;
  double num = 0, den = 0, s0 = 0;
  for (auto i : keep) {
    den += (y[i] - mean) * (y[i] - mean);
    for (auto j : keep) {
      num += w[i][j] * (y[i] - mean) * (y[j] - mean);
      s0 += w[i][j];
    }
  }
  return n / s0 * num / den;
}

struct Decomposition {
  double total, between, within;
};

inline Decomposition variance_decomposition(const std::vector<double> &y, const std::vector<std::string> &zone) {
  const double n = static_cast<double>(y.size());
  double mean = 0;
  for (double v : y) mean += v;
  mean /= n;
  Decomposition d{0, 0, 0};
  for (std::size_t i = 0; i < y.size(); ++i) {
    double zs = 0, zn = 0;
    for (std::size_t j = 0; j < y.size(); ++j)
      if (zone[j] == zone[i]) {
        zs += y[j];
        zn += 1;
      }
    const double zm = zs / zn;
    d.total += (y[i] - mean) * (y[i] - mean) / n;
    d.between += (zm - mean) * (zm - mean) / n;
    d.within += (y[i] - zm) * (y[i] - zm) / n;
  }
  return d;
}

}  // namespace oracle
