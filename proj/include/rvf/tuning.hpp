#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rvf/field.hpp"
#include "rvf/moran.hpp"

namespace rvf {

/// Bandwidth and sensitivity candidates searched by default (10 x 10).
inline const std::vector<double> kDefaultBandwidths = {0.04, 0.06, 0.08, 0.11, 0.15, 0.21, 0.29, 0.41, 0.57, 0.80};
inline const std::vector<double> kDefaultSensitivities = {0,      0.0005, 0.0012, 0.0028, 0.0067,
                                                          0.0158, 0.0375, 0.0889, 0.2108, 0.5};

enum class TuneStatus { Ok, EmptyField, Stalled, Singular };

const char *to_string(TuneStatus s);

struct TuneCandidate {
  double alpha = 0.0;
  double h = 0.0;
  /// NaN when no field could be built; recorded but ignored for Stalled.
  double mse = 0.0;
  TuneStatus status = TuneStatus::Ok;
  double stalled_fraction = 0.0;
};

struct TuneResult {
  std::vector<double> grid_h;
  std::vector<double> grid_alpha;
  /// alpha-major: candidate (a, b) sits at a * grid_h.size() + b.
  std::vector<TuneCandidate> candidates;
  std::optional<std::size_t> best;

  const TuneCandidate &argmin() const { return candidates.at(best.value()); }
};

struct TuneOptions {
  std::size_t grid_nx = 50;
  std::size_t grid_ny = 50;
  double step = 0.1;
  RvfOptions rvf;
  /// Candidates whose trajectories hit all-empty cells for more than this
  /// share of units are excluded.
  double max_stalled_fraction = 0.10;
  /// Fit on a random (1 - holdout) share and score on the rest. 0 scores
  /// in-sample on the same transitions used for fitting.
  double holdout_fraction = 0.0;
  std::uint64_t holdout_seed = 1;
};

/// Forecast mean-square error of one candidate: the field is fit on `fit`
/// over a grid covering its start and end points,
/// every start of `score` is pushed through the flow for one horizon and
/// compared with its observed end point.
TuneCandidate evaluate_candidate(const std::vector<Transition> &fit, const std::vector<Transition> &score, double h,
                                 double alpha, const TuneOptions &options);

/// Exhaustive search over grid_alpha x grid_h. Ties go to the smaller h,
/// then the smaller alpha. Throws DomainError when fewer than one candidate
/// is given or none succeeds.
TuneResult tune(const std::vector<Transition> &transitions, const std::vector<double> &grid_h,
                const std::vector<double> &grid_alpha, const TuneOptions &options = {});

void write_tune_csv(std::ostream &out, const TuneResult &result);
nlohmann::json tune_summary(const TuneResult &result);

}  // namespace rvf
