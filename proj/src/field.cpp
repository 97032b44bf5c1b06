#include "rvf/field.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rvf/csv.hpp"
#include "rvf/error.hpp"

namespace rvf {

EvalGrid EvalGrid::covering(std::span<const Vec2> points, const Sym2 &covariance, double h, std::size_t nx,
                            std::size_t ny) {
  if (nx < 2 || ny < 2) throw DomainError("grid resolution must be at least 2 per axis");
  if (points.empty()) throw DomainError("cannot build a grid around no points");
  EvalGrid g;
  g.nx = nx;
  g.ny = ny;
  g.x_min = g.x_max = points.front().x;
  g.y_min = g.y_max = points.front().y;
  for (const auto &p : points) {
    g.x_min = std::min(g.x_min, p.x);
    g.x_max = std::max(g.x_max, p.x);
    g.y_min = std::min(g.y_min, p.y);
    g.y_max = std::max(g.y_max, p.y);
  }
  const double ex = h * std::sqrt(covariance.xx);
  const double ey = h * std::sqrt(covariance.yy);
  g.x_min -= ex;
  g.x_max += ex;
  g.y_min -= ey;
  g.y_max += ey;
  return g;
}

std::size_t VectorFieldGrid::non_empty_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < mass.size(); ++i)
    if (!is_empty(i)) ++n;
  return n;
}

RvfEstimator::RvfEstimator(std::span<const Vec2> starts, std::span<const Vec2> deltas, double h, double alpha,
                           const RvfOptions &options)
    : density_(adaptive_density(std::vector<Vec2>(starts.begin(), starts.end()), h, alpha, options.kernel,
                                options.mean_rule)),
      deltas_(deltas.begin(), deltas.end()) {
  if (starts.size() != deltas.size()) throw DomainError("starts and deltas differ in length");
  const auto &est = density_.estimate;
  // c_j * N h^2 sqrt(det S) / k(0) = k(u_j) / (k(0) lambda_j^2)
  mass_scale_ = static_cast<double>(est.size()) * h * h * std::sqrt(est.covariance().det()) / est.peak();
}

RvfEstimator::NodeEstimate RvfEstimator::at(const Vec2 &z) const {
  double total = 0.0, total2 = 0.0;
  Vec2 acc;
  density_.estimate.for_each_contribution(z, [&](std::size_t j, double c) {
    total += c;
    total2 += c * c;
    acc.x += c * deltas_[j].x;
    acc.y += c * deltas_[j].y;
  });
  NodeEstimate out;
  if (total > 0.0) {
    out.arrow = acc / total;
    out.mass = total * mass_scale_;
    out.effective_n = total * total / total2;
  }
  return out;
}

std::vector<std::pair<std::size_t, double>> RvfEstimator::weights(const Vec2 &z) const {
  std::vector<std::pair<std::size_t, double>> out;
  double total = 0.0;
  density_.estimate.for_each_contribution(z, [&](std::size_t j, double c) {
    out.emplace_back(j, c);
    total += c;
  });
  for (auto &[j, w] : out) w /= total;
  std::sort(out.begin(), out.end());
  return out;
}

VectorFieldGrid RvfEstimator::evaluate(const EvalGrid &grid, int horizon) const {
  VectorFieldGrid field;
  field.grid = grid;
  field.horizon = horizon;
  const std::size_t n = grid.size();
  field.arrows.assign(n, Vec2{std::nan(""), std::nan("")});
  field.mass.assign(n, 0.0);
  field.effective_n.assign(n, 0.0);
  field.direction_variance.assign(n, std::nan(""));
  field.significant.assign(n, 0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = at(grid.node(i));
    field.arrows[i] = e.arrow;
    field.mass[i] = e.mass;
    field.effective_n[i] = e.effective_n;
  }
  return field;
}

VectorFieldGrid estimate_rvf(const std::vector<Transition> &transitions, double h, double alpha, const EvalGrid &grid,
                             const RvfOptions &options) {
  if (transitions.size() < 3) throw DomainError("field estimation needs at least 3 transitions");
  std::vector<Vec2> starts, deltas;
  starts.reserve(transitions.size());
  deltas.reserve(transitions.size());
  for (const auto &t : transitions) {
    starts.push_back(t.start);
    deltas.push_back(t.delta);
  }
  const RvfEstimator est(starts, deltas, h, alpha, options);
  auto field = est.evaluate(grid, transitions.front().horizon);
  if (field.non_empty_count() == 0) throw DomainError("every grid node is empty: bandwidth too small for the grid");
  return field;
}

double direction_variance(std::span<const Vec2> arrows) {
  std::size_t finite = 0, used = 0;
  Vec2 acc;
  for (const auto &a : arrows) {
    if (!is_finite(a)) continue;
    ++finite;
    const double len = norm(a);
    if (len == 0.0) continue;
    acc += a / len;
    ++used;
  }
  if (finite < 2) throw DomainError("direction variance needs at least two finite arrows");
  if (used == 0) throw DomainError("direction variance undefined: all arrows have zero length");
  const double r = norm(acc) / static_cast<double>(used);
  return std::clamp(1.0 - r, 0.0, 1.0);
}

void write_field_csv(std::ostream &out, const VectorFieldGrid &field) {
  out << "zx,zy,dx,dy,mass,neff,dirvar,significant\n";
  for (std::size_t i = 0; i < field.grid.size(); ++i) {
    const Vec2 z = field.grid.node(i);
    const bool empty = field.is_empty(i);
    const double dv = field.direction_variance[i];
    csv::write_row(out, {csv::format(z.x), csv::format(z.y), empty ? "" : csv::format(field.arrows[i].x),
                         empty ? "" : csv::format(field.arrows[i].y), empty ? "0" : csv::format(field.mass[i]),
                         empty ? "0" : csv::format(field.effective_n[i]),
                         std::isfinite(dv) ? csv::format(dv) : "", field.significant[i] ? "1" : "0"});
  }
}

}  // namespace rvf
