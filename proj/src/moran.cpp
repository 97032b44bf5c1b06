#include "rvf/moran.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "rvf/csv.hpp"
#include "rvf/error.hpp"
#include "rvf/parallel.hpp"
#include "rvf/stats.hpp"

namespace rvf {

WeightMatrix WeightMatrix::build(const ZonePartition &partition, const std::vector<std::string> &units) {
  WeightMatrix w;
  w.valid_from_ = partition.valid_from;
  w.valid_to_ = partition.valid_to;
  std::map<std::string, std::size_t> zone_index;
  w.zone_of_.resize(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    auto it = partition.zone_of.find(units[i]);
    if (it == partition.zone_of.end()) throw DomainError("unit " + units[i] + " has no zone");
    auto [zit, inserted] = zone_index.try_emplace(it->second, w.members_.size());
    if (inserted) {
      w.members_.emplace_back();
      w.zone_ids_.push_back(it->second);
    }
    w.zone_of_[i] = zit->second;
    w.members_[zit->second].push_back(i);
  }
  return w;
}

std::vector<std::size_t> WeightMatrix::singletons() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i)
    if (is_singleton(i)) out.push_back(i);
  return out;
}

double WeightMatrix::weight(std::size_t i, std::size_t j) const {
  if (i == j || zone_of_[i] != zone_of_[j]) return 0.0;
  return 1.0 / static_cast<double>(members_[zone_of_[i]].size() - 1);
}

std::vector<std::pair<std::size_t, double>> WeightMatrix::row(std::size_t i) const {
  std::vector<std::pair<std::size_t, double>> out;
  const auto &mates = members_[zone_of_[i]];
  if (mates.size() < 2) return out;
  const double wij = 1.0 / static_cast<double>(mates.size() - 1);
  for (auto j : mates)
    if (j != i) out.emplace_back(j, wij);
  return out;
}

std::vector<double> WeightMatrix::lag(std::span<const double> y) const {
  std::vector<double> out(size(), std::nan(""));
  for (std::size_t i = 0; i < size(); ++i) {
    const auto &mates = members_[zone_of_[i]];
    if (mates.size() < 2) continue;
    double s = 0.0;
    for (auto j : mates)
      if (j != i) s += y[j];
    out[i] = s / static_cast<double>(mates.size() - 1);
  }
  return out;
}

WeightMatrix weights_for_year(const Panel &panel, int year) {
  return WeightMatrix::build(panel.partition_for(year), panel.units());
}

std::vector<MoranPoint> to_moran(const Panel &panel, const WeightMatrix &w, int year) {
  if (!panel.has_year(year)) throw DomainError("year " + std::to_string(year) + " outside panel");
  if (year < w.valid_from() || year > w.valid_to())
    throw DomainError("weight matrix not valid in " + std::to_string(year));
  if (w.size() != panel.unit_count()) throw DomainError("weight matrix does not match panel units");
  const auto y = panel.log_density_column(year);
  const auto lag = w.lag(y);
  std::vector<MoranPoint> out;
  out.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!w.is_singleton(i)) out.push_back({i, y[i], lag[i]});
  return out;
}

std::vector<Transition> transitions(const Panel &panel, const WeightMatrix &w_start, const WeightMatrix &w_end,
                                    int t0, int t1) {
  if (t1 <= t0) throw DomainError("transition end year must follow start year");
  const auto a = to_moran(panel, w_start, t0);
  const auto b = to_moran(panel, w_end, t1);
  std::vector<Transition> out;
  std::size_t k = 0;
  for (const auto &p : a) {
    while (k < b.size() && b[k].unit < p.unit) ++k;
    if (k == b.size() || b[k].unit != p.unit) continue;
    const Vec2 s = p.z();
    const Vec2 e = b[k].z();
    out.push_back({p.unit, s, e, e - s, t1 - t0});
  }
  if (out.empty()) throw DomainError("no unit is observed in Moran space at both endpoints");
  return out;
}

namespace {

/// Moran's I over the subset `units` (values[k] belongs to units[k]) using
/// zone sums, O(N) per call.
double morans_i_fast(std::span<const double> values, std::span<const std::size_t> units, const WeightMatrix &w,
                     std::vector<double> &zone_sum) {
  const double n = static_cast<double>(values.size());
  const double mean = stats::mean(values);
  std::fill(zone_sum.begin(), zone_sum.end(), 0.0);
  std::vector<double> &zs = zone_sum;
  for (std::size_t k = 0; k < values.size(); ++k) zs[w.zone_of(units[k])] += values[k] - mean;

  // Zone-mates present in the subset determine S0.
  std::vector<double> present(w.zone_count(), 0.0);
  for (auto u : units) present[w.zone_of(u)] += 1.0;

  double num = 0.0, den = 0.0, s0 = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto z = w.zone_of(units[k]);
    const double nz = static_cast<double>(w.zone_members(z).size());
    if (nz < 2) continue;
    const double c = values[k] - mean;
    num += c * (zs[z] - c) / (nz - 1.0);
    s0 += (present[z] - 1.0) / (nz - 1.0);
  }
  for (double v : values) den += (v - mean) * (v - mean);
  return (n / s0) * num / den;
}

}  // namespace

double morans_i_value(std::span<const double> values, std::span<const std::size_t> units, const WeightMatrix &w) {
  std::vector<double> zone_sum(w.zone_count());
  return morans_i_fast(values, units, w, zone_sum);
}

MoranStatistic morans_i(const std::vector<MoranPoint> &points, const WeightMatrix &w, std::size_t permutations,
                        std::uint64_t seed) {
  if (points.size() < 3) throw DomainError("Moran's I needs at least three points");
  std::vector<double> values;
  std::vector<std::size_t> units;
  for (const auto &p : points) {
    values.push_back(p.own);
    units.push_back(p.unit);
  }
  if (stats::variance(values) <= 0.0) throw DomainError("Moran's I undefined for constant values");

  MoranStatistic out;
  out.value = morans_i_value(values, units, w);
  out.expected = -1.0 / (static_cast<double>(values.size()) - 1.0);
  out.permutations = permutations;
  if (permutations == 0) {
    out.lo = out.hi = std::nan("");
    return out;
  }

  std::vector<double> perm_stats(permutations);
#pragma omp parallel
  {
    std::vector<double> shuffled(values);
    std::vector<double> zone_sum(w.zone_count());
#pragma omp for schedule(static)
    for (std::size_t r = 0; r < permutations; ++r) {
      auto rng = replicate_rng(seed, r);
      shuffled = values;
      for (std::size_t i = shuffled.size() - 1; i > 0; --i) std::swap(shuffled[i], shuffled[uniform_index(rng, i + 1)]);
      perm_stats[r] = morans_i_fast(shuffled, units, w, zone_sum);
    }
  }
  out.lo = stats::quantile(perm_stats, 0.025);
  out.hi = stats::quantile(perm_stats, 0.975);
  const auto extreme = std::count_if(perm_stats.begin(), perm_stats.end(), [&](double v) {
    return std::abs(v - out.expected) >= std::abs(out.value - out.expected);
  });
  out.p_value = static_cast<double>(extreme + 1) / static_cast<double>(permutations + 1);
  return out;
}

double rule_of_thumb_bandwidth(std::span<const double> x) {
  std::vector<double> v(x.begin(), x.end());
  const double sd = stats::sample_sd(v);
  const double iqr = stats::quantile(v, 0.75) - stats::quantile(v, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  return 1.06 * spread * std::pow(static_cast<double>(v.size()), -0.2);
}

namespace {

struct LocalLinear {
  double fit;
  double slope;
};

/// Local-linear Gaussian smoother over points sorted by x; kernel truncated
/// at 5 bandwidths.
LocalLinear local_linear(std::span<const double> xs, std::span<const double> ys, double x0, double h) {
  const double reach = 5.0 * h;
  auto first = std::lower_bound(xs.begin(), xs.end(), x0 - reach);
  auto last = std::upper_bound(first, xs.end(), x0 + reach);
  double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
  for (auto it = first; it != last; ++it) {
    const auto k = static_cast<std::size_t>(it - xs.begin());
    const double d = xs[k] - x0;
    const double u = d / h;
    const double wk = std::exp(-0.5 * u * u);
    s0 += wk;
    s1 += wk * d;
    s2 += wk * d * d;
    t0 += wk * ys[k];
    t1 += wk * d * ys[k];
  }
  const double det = s0 * s2 - s1 * s1;
  if (!(det > 1e-300) || s0 <= 0.0) return {std::nan(""), std::nan("")};
  return {(s2 * t0 - s1 * t1) / det, (s0 * t1 - s1 * t0) / det};
}

}  // namespace

MoranCurve moran_curve(const std::vector<MoranPoint> &points, const MoranCurveOptions &options) {
  if (points.size() < 30) throw DomainError("Moran curve needs at least 30 points");
  if (options.evaluation_points < 2) throw DomainError("Moran curve needs at least 2 abscissae");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    return points[a].own < points[b].own || (points[a].own == points[b].own && points[a].lag < points[b].lag);
  });
  std::vector<double> xs, ys;
  for (auto k : order) {
    xs.push_back(points[k].own);
    ys.push_back(points[k].lag);
  }
  const double xmin = xs.front(), xmax = xs.back();
  if (!(xmax > xmin)) throw DomainError("Moran curve: degenerate own-coordinate range");

  MoranCurve curve;
  curve.bandwidth = options.bandwidth.value_or(rule_of_thumb_bandwidth(xs));
  if (!(curve.bandwidth > 0.0)) throw DomainError("Moran curve: non-positive bandwidth");
  const std::size_t m = options.evaluation_points;
  for (std::size_t k = 0; k < m; ++k)
    curve.x.push_back(xmin + (xmax - xmin) * static_cast<double>(k) / static_cast<double>(m - 1));
  for (double x0 : curve.x) {
    const auto ll = local_linear(xs, ys, x0, curve.bandwidth);
    curve.fit.push_back(ll.fit);
    curve.slope.push_back(ll.slope);
  }

  const std::size_t reps = options.replicates;
  std::vector<double> rep_fit(reps * m), rep_slope(reps * m);
  const std::size_t n = xs.size();
#pragma omp parallel
  {
    std::vector<std::size_t> idx(n);
    std::vector<double> bx(n), by(n);
#pragma omp for schedule(static)
    for (std::size_t r = 0; r < reps; ++r) {
      auto rng = replicate_rng(options.seed, r);
      for (auto &i : idx) i = uniform_index(rng, n);
      std::sort(idx.begin(), idx.end());  // base arrays are sorted by x
      for (std::size_t i = 0; i < n; ++i) {
        bx[i] = xs[idx[i]];
        by[i] = ys[idx[i]];
      }
      for (std::size_t k = 0; k < m; ++k) {
        const auto ll = local_linear(bx, by, curve.x[k], curve.bandwidth);
        rep_fit[r * m + k] = ll.fit;
        rep_slope[r * m + k] = ll.slope;
      }
    }
  }

  auto band = [&](const std::vector<double> &rep, std::size_t k, double centre) {
    double s = 0.0, s2 = 0.0;
    std::size_t cnt = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double v = rep[r * m + k];
      if (!std::isfinite(v)) continue;
      s += v;
      s2 += v * v;
      ++cnt;
    }
    if (cnt < 2 || !std::isfinite(centre)) return std::pair{centre, centre};
    const double mu = s / static_cast<double>(cnt);
    const double var = std::max(0.0, (s2 - static_cast<double>(cnt) * mu * mu) / static_cast<double>(cnt - 1));
    const double half = 1.96 * std::sqrt(var);
    return std::pair{centre - half, centre + half};
  };
  for (std::size_t k = 0; k < m; ++k) {
    auto [lo, hi] = band(rep_fit, k, curve.fit[k]);
    curve.lo.push_back(lo);
    curve.hi.push_back(hi);
    auto [slo, shi] = band(rep_slope, k, curve.slope[k]);
    curve.slope_lo.push_back(slo);
    curve.slope_hi.push_back(shi);
  }
  return curve;
}

DispersionStats dispersion_stats(const Panel &panel, int year) {
  const auto y = panel.log_density_column(year);
  const auto &partition = panel.partition_for(year);
  const auto n = static_cast<double>(y.size());

  DispersionStats out;
  std::vector<double> density(y.size());
  const auto t = panel.year_index(year);
  for (std::size_t i = 0; i < y.size(); ++i)
    density[i] = static_cast<double>(panel.population(i, t)) / panel.area(i);
  out.mean_density = stats::mean(density);
  out.mean_log_density = stats::mean(y);
  const double sd = std::sqrt(stats::variance(density));
  out.cv = out.mean_density > 0.0 ? sd / out.mean_density : 0.0;

  std::map<std::string, std::pair<double, double>> zone;  // sum, count
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto it = partition.zone_of.find(panel.units()[i]);
    if (it == partition.zone_of.end()) throw DomainError("unit " + panel.units()[i] + " has no zone");
    auto &acc = zone[it->second];
    acc.first += y[i];
    acc.second += 1.0;
  }
  const double mu = out.mean_log_density;
  for (const auto &[id, acc] : zone) {
    const double zm = acc.first / acc.second;
    out.var_between += acc.second * (zm - mu) * (zm - mu);
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto &acc = zone[partition.zone_of.at(panel.units()[i])];
    const double zm = acc.first / acc.second;
    out.var_within += (y[i] - zm) * (y[i] - zm);
    out.var_total += (y[i] - mu) * (y[i] - mu);
  }
  out.var_between /= n;
  out.var_within /= n;
  out.var_total /= n;
  if (out.var_total > 0.0) {
    out.between_share = out.var_between / out.var_total;
    out.within_share = out.var_within / out.var_total;
  } else {
    out.degenerate = true;
  }
  return out;
}

void write_moran_points_csv(std::ostream &out, const Panel &panel, const std::vector<MoranPoint> &points, int year) {
  out << "unit_id,year,own,lag,population\n";
  const auto t = panel.year_index(year);
  for (const auto &p : points)
    csv::write_row(out, {panel.units()[p.unit], std::to_string(year), csv::format(p.own), csv::format(p.lag),
                         std::to_string(panel.population(p.unit, t))});
}

void write_curve_csv(std::ostream &out, const MoranCurve &curve) {
  out << "x,fit,lo,hi\n";
  for (std::size_t k = 0; k < curve.x.size(); ++k)
    csv::write_row(out, {csv::format(curve.x[k]), csv::format(curve.fit[k]), csv::format(curve.lo[k]),
                         csv::format(curve.hi[k])});
}

}  // namespace rvf
