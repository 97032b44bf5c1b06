#include "rvf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rvf/csv.hpp"
#include "rvf/error.hpp"

namespace rvf {
namespace {

/// Cell index and fractional offset along one axis. Offsets within 1e-10
/// of a node snap onto it so node queries return node values exactly.
std::pair<std::size_t, double> locate(double v, double lo, double step, std::size_t n) {
  double t = (v - lo) / step;
  const double r = std::round(t);
  if (std::abs(t - r) < 1e-10) t = r;
  const double max_cell = static_cast<double>(n - 2);
  const double cell = std::clamp(std::floor(t), 0.0, max_cell);
  return {static_cast<std::size_t>(cell), t - cell};
}

}  // namespace

FieldSample interpolate_field(const VectorFieldGrid &field, const Vec2 &z) {
  const auto &g = field.grid;
  FieldSample out;
  Vec2 q = z;
  if (!g.contains(q)) {
    q.x = std::clamp(q.x, g.x_min, g.x_max);
    q.y = std::clamp(q.y, g.y_min, g.y_max);
    out.clamped = true;
  }
  const auto [ix, fx] = locate(q.x, g.x_min, g.dx(), g.nx);
  const auto [iy, fy] = locate(q.y, g.y_min, g.dy(), g.ny);

  const std::size_t ia = g.index(ix, iy), ib = g.index(ix + 1, iy);
  const std::size_t ic = g.index(ix, iy + 1), id = g.index(ix + 1, iy + 1);
  const bool ea = field.is_empty(ia), eb = field.is_empty(ib), ec = field.is_empty(ic), ed = field.is_empty(id);

  if (!ea && !eb && !ec && !ed) {
    const Vec2 &a = field.arrows[ia], &b = field.arrows[ib], &c = field.arrows[ic], &d = field.arrows[id];
    const double lx = std::lerp(std::lerp(a.x, b.x, fx), std::lerp(c.x, d.x, fx), fy);
    const double ly = std::lerp(std::lerp(a.y, b.y, fx), std::lerp(c.y, d.y, fx), fy);
    out.value = {lx, ly};
    return out;
  }

  const std::size_t idx[4] = {ia, ib, ic, id};
  const bool empty[4] = {ea, eb, ec, ed};
  const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  double wsum = 0.0;
  std::size_t present = 0;
  Vec2 acc;
  for (int k = 0; k < 4; ++k) {
    if (empty[k]) continue;
    ++present;
    wsum += w[k];
    acc += w[k] * field.arrows[idx[k]];
  }
  if (present == 0) {
    out.hole = true;
    return out;
  }
  out.partial = true;
  if (wsum > 0.0) {
    out.value = acc / wsum;
  } else {
    // Query sits on an empty node whose populated neighbours carry zero
    // bilinear weight: fall back to their plain average.
    Vec2 mean;
    for (int k = 0; k < 4; ++k)
      if (!empty[k]) mean += field.arrows[idx[k]];
    out.value = mean / static_cast<double>(present);
  }
  return out;
}

Trajectory integrate(const VectorFieldGrid &field, const Vec2 &z0, double horizon_years,
                     const IntegrateOptions &options) {
  if (!(options.step > 0.0)) throw DomainError("integration step must be positive");
  const double rate = 1.0 / static_cast<double>(field.horizon);
  return integrate_rk4(
      [&](const Vec2 &p) {
        FieldSample s = interpolate_field(field, p);
        s.value *= rate;
        return s;
      },
      z0, horizon_years, options);
}

Vec2 flow_map(const VectorFieldGrid &field, const Vec2 &z0, double horizon_years, double step) {
  IntegrateOptions opt;
  opt.step = step;
  opt.record_every = static_cast<std::size_t>(-1);
  return integrate(field, z0, horizon_years, opt).terminal;
}

std::vector<Trajectory> forecast_all(const VectorFieldGrid &field, const std::vector<Vec2> &starts,
                                     const std::vector<std::size_t> &units, double horizon_years,
                                     const IntegrateOptions &options) {
  if (starts.size() != units.size()) throw DomainError("one unit index per start point required");
  std::vector<Trajectory> out(starts.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < starts.size(); ++i) {
    out[i] = integrate(field, starts[i], horizon_years, options);
    out[i].unit = units[i];
  }
  return out;
}

void write_trajectories_csv(std::ostream &out, const std::vector<Trajectory> &trajectories,
                            const std::vector<std::string> &ids, std::size_t stride) {
  if (stride == 0) stride = 1;
  out << "unit_id,t,zx,zy\n";
  for (const auto &tr : trajectories) {
    const auto &id = ids.at(tr.unit);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      if (k % stride != 0 && k + 1 != tr.times.size()) continue;
      csv::write_row(out, {id, csv::format(tr.times[k]), csv::format(tr.positions[k].x),
                           csv::format(tr.positions[k].y)});
    }
  }
}

}  // namespace rvf
