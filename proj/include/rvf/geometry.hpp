#pragma once

#include <cmath>

namespace rvf {

/// Point or displacement in the Moran plane: x is the unit's own value,
/// y the neighbour average.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 &operator+=(const Vec2 &o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2 &operator-=(const Vec2 &o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2 &operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend constexpr Vec2 operator+(Vec2 a, const Vec2 &b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2 &b) { return a -= b; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return Vec2{a.x / s, a.y / s}; }
  friend constexpr bool operator==(const Vec2 &, const Vec2 &) = default;
};

inline double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2 &a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2 &a, const Vec2 &b) { return norm(a - b); }
inline bool is_finite(const Vec2 &a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double det() const { return xx * yy - xy * xy; }
  double trace() const { return xx + yy; }

  Sym2 inverse() const {
    const double d = det();
    return Sym2{yy / d, -xy / d, xx / d};
  }

  /// v^T M v
  double quad(const Vec2 &v) const { return xx * v.x * v.x + 2.0 * xy * v.x * v.y + yy * v.y * v.y; }
};

/// Lower-triangular Cholesky factor of an SPD matrix, used to whiten points
/// so that Mahalanobis distance becomes Euclidean distance.
struct Whitener {
  double l11 = 1.0;
  double l21 = 0.0;
  double l22 = 1.0;

  static Whitener from_covariance(const Sym2 &s) {
    Whitener w;
    w.l11 = std::sqrt(s.xx);
    w.l21 = s.xy / w.l11;
    w.l22 = std::sqrt(s.yy - w.l21 * w.l21);
    return w;
  }

  /// L^{-1} v
  Vec2 apply(const Vec2 &v) const {
    const double u1 = v.x / l11;
    return Vec2{u1, (v.y - l21 * u1) / l22};
  }
};

}  // namespace rvf
