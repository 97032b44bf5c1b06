#pragma once

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "rvf/field.hpp"
#include "rvf/geometry.hpp"

namespace rvf {

/// Field value at an arbitrary point together with how it was obtained.
struct FieldSample {
  Vec2 value;
  /// The query lay outside the grid and was clamped to its boundary.
  bool clamped = false;
  /// Some (but not all) enclosing corners were empty; the remaining corners
  /// were blended with renormalized bilinear weights.
  bool partial = false;
  /// All enclosing corners were empty; value is zero.
  bool hole = false;
};

/// Bilinear blend of the four corner arrows of the cell containing z.
FieldSample interpolate_field(const VectorFieldGrid &field, const Vec2 &z);

struct IntegrateOptions {
  /// Fixed RK4 step in years.
  double step = 0.1;
  /// Stop once a whole step moves the state by less than this (0 = never).
  double stop_tolerance = 0.0;
  /// Keep every k-th step in the recorded path (the terminal state is
  /// always recorded).
  std::size_t record_every = 1;
};

struct Trajectory {
  std::size_t unit = 0;
  std::vector<double> times;
  std::vector<Vec2> positions;
  Vec2 terminal;
  double end_time = 0.0;
  bool clamped = false;
  bool hole = false;
  /// Ended early under IntegrateOptions::stop_tolerance.
  bool converged = false;
  /// A non-finite state was produced; terminal is the last valid position.
  bool failed = false;
};

/// Classical fixed-step RK4 for dp/dt = f(p), with f returning a
/// FieldSample. Positions are accumulated with compensated summation so
/// that exactly representable flows stay exact over many steps.
template <class F>
Trajectory integrate_rk4(F &&f, const Vec2 &z0, double horizon, const IntegrateOptions &options);

/// Integrates through the estimated field with rate arrow / horizon, so
/// times are in years and one field horizon of constant field moves a
/// point by one arrow.
Trajectory integrate(const VectorFieldGrid &field, const Vec2 &z0, double horizon_years,
                     const IntegrateOptions &options = {});

/// Terminal positions only (no recorded path).
Vec2 flow_map(const VectorFieldGrid &field, const Vec2 &z0, double horizon_years, double step = 0.1);

/// Integrates every start point; result i belongs to starts[i] and carries
/// `units[i]` as its unit index.
std::vector<Trajectory> forecast_all(const VectorFieldGrid &field, const std::vector<Vec2> &starts,
                                     const std::vector<std::size_t> &units, double horizon_years,
                                     const IntegrateOptions &options = {});

/// unit_id,t,zx,zy. `ids[unit]` names each trajectory's unit; every
/// `stride`-th recorded sample is written plus the terminal one.
void write_trajectories_csv(std::ostream &out, const std::vector<Trajectory> &trajectories,
                            const std::vector<std::string> &ids, std::size_t stride = 1);

// ---------------------------------------------------------------------------

namespace detail {

/// Neumaier-compensated accumulator for a 2-vector.
struct CompensatedVec2 {
  Vec2 sum;
  Vec2 carry;

  void add(const Vec2 &v) {
    add1(sum.x, carry.x, v.x);
    add1(sum.y, carry.y, v.y);
  }
  Vec2 value() const { return {sum.x + carry.x, sum.y + carry.y}; }

 private:
  static void add1(double &s, double &c, double v) {
    const double t = s + v;
    if (std::abs(s) >= std::abs(v))
      c += (s - t) + v;
    else
      c += (v - t) + s;
    s = t;
  }
};

}  // namespace detail

template <class F>
Trajectory integrate_rk4(F &&f, const Vec2 &z0, double horizon, const IntegrateOptions &options) {
  Trajectory traj;
  const double step = options.step > 0.0 ? options.step : 0.1;
  const auto n = horizon > 0.0 ? static_cast<std::size_t>(std::ceil(horizon / step - 1e-9)) : std::size_t{0};
  const double dt = n > 0 ? horizon / static_cast<double>(n) : 0.0;
  const std::size_t every = options.record_every > 0 ? options.record_every : 1;

  detail::CompensatedVec2 state;
  state.sum = z0;
  auto eval = [&](const Vec2 &p) {
    const FieldSample s = f(p);
    traj.clamped |= s.clamped;
    traj.hole |= s.hole;
    return s.value;
  };

  Vec2 p = z0;
  traj.times.push_back(0.0);
  traj.positions.push_back(p);
  std::size_t k = 0;
  for (; k < n; ++k) {
    const Vec2 k1 = eval(p);
    const Vec2 k2 = eval(p + (0.5 * dt) * k1);
    const Vec2 k3 = eval(p + (0.5 * dt) * k2);
    const Vec2 k4 = eval(p + dt * k3);
    const Vec2 inc = dt * ((k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0);
    if (!is_finite(inc)) {
      traj.failed = true;
      break;
    }
    state.add(inc);
    const Vec2 next = state.value();
    if (!is_finite(next)) {
      traj.failed = true;
      break;
    }
    p = next;
    const double t = dt * static_cast<double>(k + 1);
    const bool last = k + 1 == n;
    const bool settled = options.stop_tolerance > 0.0 && norm(inc) < options.stop_tolerance;
    if (last || settled || (k + 1) % every == 0) {
      traj.times.push_back(t);
      traj.positions.push_back(p);
    }
    if (settled) {
      traj.converged = true;
      ++k;
      break;
    }
  }
  traj.terminal = p;
  traj.end_time = traj.times.back();
  return traj;
}

}  // namespace rvf
