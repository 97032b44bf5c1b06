#include "rvf/tuning.hpp"

#include <cmath>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "rvf/csv.hpp"
#include "rvf/error.hpp"
#include "rvf/flow.hpp"
#include "rvf/parallel.hpp"

namespace rvf {

const char *to_string(TuneStatus s) {
  switch (s) {
    case TuneStatus::Ok: return "ok";
    case TuneStatus::EmptyField: return "empty_field";
    case TuneStatus::Stalled: return "stalled";
    case TuneStatus::Singular: return "singular";
  }
  return "unknown";
}

TuneCandidate evaluate_candidate(const std::vector<Transition> &fit, const std::vector<Transition> &score, double h,
                                 double alpha, const TuneOptions &options) {
  TuneCandidate c{alpha, h, std::nan(""), TuneStatus::Ok, 0.0};
  std::vector<Vec2> starts, deltas, extent;
  for (const auto &t : fit) {
    starts.push_back(t.start);
    deltas.push_back(t.delta);
    extent.push_back(t.start);
    extent.push_back(t.end);
  }
  VectorFieldGrid field;
  try {
    const RvfEstimator est(starts, deltas, h, alpha, options.rvf);
    const auto grid = EvalGrid::covering(extent, est.density().estimate.covariance(), h, options.grid_nx,
                                         options.grid_ny);
    field = est.evaluate(grid, fit.front().horizon);
  } catch (const DomainError &) {
    c.status = TuneStatus::Singular;
    return c;
  }
  if (field.non_empty_count() == 0) {
    c.status = TuneStatus::EmptyField;
    return c;
  }

  IntegrateOptions opt;
  opt.step = options.step;
  opt.record_every = static_cast<std::size_t>(-1);
  const double horizon = static_cast<double>(field.horizon);
  double sum = 0.0;
  std::size_t stalled = 0;
  for (const auto &t : score) {
    const auto traj = integrate(field, t.start, horizon, opt);
    if (traj.hole) ++stalled;
    const Vec2 d = traj.terminal - t.end;
    sum += dot(d, d);
  }
  c.stalled_fraction = static_cast<double>(stalled) / static_cast<double>(score.size());
  c.mse = sum / static_cast<double>(score.size());
  if (c.stalled_fraction > options.max_stalled_fraction) c.status = TuneStatus::Stalled;
  else if (!std::isfinite(c.mse)) c.status = TuneStatus::Singular;
  return c;
}

TuneResult tune(const std::vector<Transition> &transitions, const std::vector<double> &grid_h,
                const std::vector<double> &grid_alpha, const TuneOptions &options) {
  if (grid_h.empty() || grid_alpha.empty()) throw DomainError("tuning grid is empty");
  if (transitions.size() < 3) throw DomainError("tuning needs at least 3 transitions");

  std::vector<Transition> fit = transitions, score = transitions;
  if (options.holdout_fraction > 0.0) {
    if (options.holdout_fraction >= 1.0) throw DomainError("holdout fraction must be below 1");
    std::vector<std::size_t> idx(transitions.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = replicate_rng(options.holdout_seed, 0);
    for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[uniform_index(rng, i + 1)]);
    const auto n_score = static_cast<std::size_t>(std::round(options.holdout_fraction * idx.size()));
    score.clear();
    fit.clear();
    for (std::size_t k = 0; k < idx.size(); ++k) (k < n_score ? score : fit).push_back(transitions[idx[k]]);
    if (fit.size() < 3 || score.empty()) throw DomainError("holdout split leaves too few transitions");
  }

  TuneResult result;
  result.grid_h = grid_h;
  result.grid_alpha = grid_alpha;
  const std::size_t nh = grid_h.size();
  result.candidates.resize(grid_alpha.size() * nh);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t k = 0; k < result.candidates.size(); ++k)
    result.candidates[k] = evaluate_candidate(fit, score, grid_h[k % nh], grid_alpha[k / nh], options);

  for (std::size_t k = 0; k < result.candidates.size(); ++k) {
    const auto &c = result.candidates[k];
    if (c.status != TuneStatus::Ok) continue;
    if (!result.best) {
      result.best = k;
      continue;
    }
    const auto &b = result.candidates[*result.best];
    if (c.mse < b.mse || (c.mse == b.mse && (c.h < b.h || (c.h == b.h && c.alpha < b.alpha)))) result.best = k;
  }
  if (!result.best) throw DomainError("no tuning candidate produced a usable field");
  return result;
}

void write_tune_csv(std::ostream &out, const TuneResult &result) {
  out << "alpha,h,mse,status\n";
  for (const auto &c : result.candidates)
    csv::write_row(out, {csv::format(c.alpha), csv::format(c.h), std::isfinite(c.mse) ? csv::format(c.mse) : "",
                         to_string(c.status)});
}

nlohmann::json tune_summary(const TuneResult &result) {
  nlohmann::json j;
  const auto &b = result.argmin();
  j["argmin"] = {{"alpha", b.alpha}, {"h", b.h}, {"mse", b.mse}};
  j["grid_h"] = result.grid_h;
  j["grid_alpha"] = result.grid_alpha;
  j["candidates"] = result.candidates.size();
  auto failed = nlohmann::json::array();
  for (const auto &c : result.candidates)
    if (c.status != TuneStatus::Ok)
      failed.push_back({{"alpha", c.alpha}, {"h", c.h}, {"status", to_string(c.status)}});
  j["failed"] = failed;
  return j;
}

}  // namespace rvf
