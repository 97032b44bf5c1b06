#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rvf/geometry.hpp"
#include "rvf/kde.hpp"
#include "rvf/moran.hpp"

namespace rvf {

/// Regular lattice of evaluation points, stored row-major with x varying
/// fastest: node (ix, iy) has index iy * nx + ix.
struct EvalGrid {
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  std::size_t nx = 2, ny = 2;

  std::size_t size() const { return nx * ny; }
  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx + ix; }
  double dx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
  double dy() const { return (y_max - y_min) / static_cast<double>(ny - 1); }
  Vec2 node(std::size_t ix, std::size_t iy) const {
    return {x_min + dx() * static_cast<double>(ix), y_min + dy() * static_cast<double>(iy)};
  }
  Vec2 node(std::size_t i) const { return node(i % nx, i / nx); }
  bool contains(const Vec2 &z) const { return z.x >= x_min && z.x <= x_max && z.y >= y_min && z.y <= y_max; }

  /// Bounding box of `points` widened on each axis by the extent of a unit
  /// kernel, h * sqrt(S_ii). Throws DomainError if a resolution is < 2.
  static EvalGrid covering(std::span<const Vec2> points, const Sym2 &covariance, double h, std::size_t nx,
                           std::size_t ny);
};

/// Estimated field on a grid. Nodes without kernel support are empty:
/// their arrow is NaN and must not be read as a zero movement.
struct VectorFieldGrid {
  EvalGrid grid;
  std::vector<Vec2> arrows;
  /// Kernel mass in transition-equivalents: sum_j k(u_j) / (k(0) lambda_j^2).
  std::vector<double> mass;
  /// Kish effective number of transitions, (sum w)^2 / sum w^2.
  std::vector<double> effective_n;
  /// Circular variance of bootstrap arrow directions; NaN until computed.
  std::vector<double> direction_variance;
  std::vector<std::uint8_t> significant;
  /// Years spanned by each arrow.
  int horizon = 1;

  bool is_empty(std::size_t node) const { return !(mass[node] > 0.0); }
  std::size_t non_empty_count() const;
};

struct RvfOptions {
  KernelSpec kernel = epanechnikov();
  GeometricMeanRule mean_rule = kDefaultMeanRule;
};

/// Kernel-weighted average of observed movements. The weight of transition
/// j at z is its contribution to the adaptive density at z divided by the
/// density itself, so weights at a supported point sum to one.
class RvfEstimator {
 public:
  RvfEstimator(std::span<const Vec2> starts, std::span<const Vec2> deltas, double h, double alpha,
               const RvfOptions &options = {});

  struct NodeEstimate {
    Vec2 arrow{std::nan(""), std::nan("")};
    double mass = 0.0;
    double effective_n = 0.0;
  };

  NodeEstimate at(const Vec2 &z) const;
  /// Normalized weights (j, w_j) at z; empty when z has no support.
  std::vector<std::pair<std::size_t, double>> weights(const Vec2 &z) const;
  VectorFieldGrid evaluate(const EvalGrid &grid, int horizon) const;

  const AdaptiveDensity &density() const { return density_; }

 private:
  AdaptiveDensity density_;
  std::vector<Vec2> deltas_;
  double mass_scale_;
};

/// Estimates the field of `transitions` on `grid`. Throws DomainError for
/// fewer than 3 transitions or when every node is empty.
VectorFieldGrid estimate_rvf(const std::vector<Transition> &transitions, double h, double alpha, const EvalGrid &grid,
                             const RvfOptions &options = {});

/// 1 - |mean of unit direction vectors|, in [0, 1]. Zero-length and
/// non-finite arrows are ignored. Throws DomainError if fewer than 2 finite
/// arrows are given or all of them have zero length.
double direction_variance(std::span<const Vec2> arrows);

/// One row per node: zx,zy,dx,dy,mass,neff,dirvar,significant. Empty nodes have
/// blank arrow fields and mass 0.
void write_field_csv(std::ostream &out, const VectorFieldGrid &field);

}  // namespace rvf
