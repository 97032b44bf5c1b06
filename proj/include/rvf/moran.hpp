#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rvf/geometry.hpp"
#include "rvf/panel.hpp"

namespace rvf {

/// Row-standardized zone-membership weights with the diagonal excluded:
/// W[i,j] = 1/(n_z - 1) for distinct zone-mates. Stored as zone lists, not
/// as an explicit N x N matrix.
class WeightMatrix {
 public:
  /// Throws DomainError if a unit has no zone in `partition`.
  static WeightMatrix build(const ZonePartition &partition, const std::vector<std::string> &units);

  std::size_t size() const { return zone_of_.size(); }
  std::size_t zone_count() const { return members_.size(); }
  std::size_t zone_of(std::size_t unit) const { return zone_of_[unit]; }
  const std::vector<std::size_t> &zone_members(std::size_t zone) const { return members_[zone]; }
  const std::string &zone_id(std::size_t zone) const { return zone_ids_[zone]; }
  bool is_singleton(std::size_t unit) const { return members_[zone_of_[unit]].size() < 2; }
  /// Units whose zone has no other member (empty row).
  std::vector<std::size_t> singletons() const;

  double weight(std::size_t i, std::size_t j) const;
  /// Non-zero entries (j, w_ij) of row i.
  std::vector<std::pair<std::size_t, double>> row(std::size_t i) const;

  /// (W y)_i for every unit; NaN for singleton rows.
  std::vector<double> lag(std::span<const double> y) const;

  int valid_from() const { return valid_from_; }
  int valid_to() const { return valid_to_; }

 private:
  std::vector<std::size_t> zone_of_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::string> zone_ids_;
  int valid_from_ = 0;
  int valid_to_ = 0;
};

/// W built from the partition the panel declares valid in `year`.
WeightMatrix weights_for_year(const Panel &panel, int year);

/// A unit's position in the Moran plane: (own value, neighbour average).
struct MoranPoint {
  std::size_t unit = 0;
  double own = 0.0;
  double lag = 0.0;

  Vec2 z() const { return {own, lag}; }
};

struct Transition {
  std::size_t unit = 0;
  Vec2 start;
  Vec2 end;
  /// end - start
  Vec2 delta;
  int horizon = 0;
};

/// Moran-plane points in `year`, singleton-zone units excluded. Throws
/// DomainError if the year is outside the panel or W's validity window.
std::vector<MoranPoint> to_moran(const Panel &panel, const WeightMatrix &w, int year);

/// Movements between `t0` and `t1`. The start point uses `w_start` and the
/// end point `w_end`, so a change of partition shows up in the lag
/// coordinate. Only units non-singleton under both are kept.
std::vector<Transition> transitions(const Panel &panel, const WeightMatrix &w_start, const WeightMatrix &w_end,
                                    int t0, int t1);

struct MoranStatistic {
  double value = 0.0;
  double expected = 0.0;
  /// 2.5% / 97.5% quantiles of the permutation distribution.
  double lo = 0.0;
  double hi = 0.0;
  double p_value = 1.0;
  std::size_t permutations = 0;
};

/// Global Moran's I of the own coordinates with a permutation band.
/// Throws DomainError when the values are constant.
MoranStatistic morans_i(const std::vector<MoranPoint> &points, const WeightMatrix &w, std::size_t permutations = 999,
                        std::uint64_t seed = 1);

/// Only the statistic, no inference.
double morans_i_value(std::span<const double> values, std::span<const std::size_t> units, const WeightMatrix &w);

struct MoranCurveOptions {
  std::size_t evaluation_points = 100;
  std::size_t replicates = 500;
  std::uint64_t seed = 1;
  /// Gaussian kernel bandwidth on the own axis; rule of thumb when unset.
  std::optional<double> bandwidth;
};

/// Non-parametric regression of the neighbour average on the own value.
/// `slope` is the local Moran coefficient. Bands are fit +- 1.96 bootstrap
/// standard errors, so they always bracket the fit.
struct MoranCurve {
  std::vector<double> x;
  std::vector<double> fit;
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> slope;
  std::vector<double> slope_lo;
  std::vector<double> slope_hi;
  double bandwidth = 0.0;
};

MoranCurve moran_curve(const std::vector<MoranPoint> &points, const MoranCurveOptions &options = {});

/// Normal-reference bandwidth 1.06 min(sd, IQR/1.34) n^(-1/5).
double rule_of_thumb_bandwidth(std::span<const double> x);

struct DispersionStats {
  double mean_density = 0.0;
  double mean_log_density = 0.0;
  /// Coefficient of variation of density levels (not logs).
  double cv = 0.0;
  double var_total = 0.0;
  double var_between = 0.0;
  double var_within = 0.0;
  double between_share = 0.0;
  double within_share = 0.0;
  /// Total variance was zero; shares reported as 0.
  bool degenerate = false;
};

/// Dispersion of the panel in `year` with the between/within-zone
/// decomposition of log-density variance under the partition valid then.
DispersionStats dispersion_stats(const Panel &panel, int year);

void write_moran_points_csv(std::ostream &out, const Panel &panel, const std::vector<MoranPoint> &points, int year);
void write_curve_csv(std::ostream &out, const MoranCurve &curve);

}  // namespace rvf
