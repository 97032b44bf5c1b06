#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rvf/field.hpp"
#include "rvf/flow.hpp"
#include "rvf/moran.hpp"

namespace rvf {

/// B fields, each estimated from N transitions drawn with replacement from
/// the observed N, all evaluated on the same grid.
struct BootstrapEnsemble {
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::vector<VectorFieldGrid> fields;
  /// Replicates whose resample had a singular covariance; their fields are
  /// entirely empty.
  std::vector<std::uint8_t> degenerate;

  std::size_t degenerate_count() const;
};

/// Resampled index sets for replicate b are drawn from replicate_rng(seed, b).
std::vector<std::vector<std::size_t>> bootstrap_resamples(std::size_t n, std::size_t replicates, std::uint64_t seed);

BootstrapEnsemble bootstrap_fields(const std::vector<Transition> &transitions, double h, double alpha,
                                   const EvalGrid &grid, std::size_t replicates, std::uint64_t seed,
                                   const RvfOptions &options = {});

/// Same as bootstrap_fields but with caller-supplied resamples.
BootstrapEnsemble bootstrap_fields_from(const std::vector<Transition> &transitions, double h, double alpha,
                                        const EvalGrid &grid, const std::vector<std::vector<std::size_t>> &resamples,
                                        const RvfOptions &options = {});

struct SignificanceOptions {
  double level = 0.05;
  /// Nodes defined in fewer replicates are never significant.
  std::size_t min_replicates = 20;
  /// Use the Hotelling threshold for the node's effective sample size
  /// instead of the large-sample chi-square quantile.
  bool small_sample = true;
};

/// Critical value for mean^T C^-1 mean. An infinite effective_n gives the
/// chi-square(2) quantile -2 ln(level); a finite one the Hotelling T^2
/// quantile 2(n-1)/(n-2) F(2, n-2), which tends to it from above. Infinite
/// (never significant) for n <= 3.
double significance_threshold(double level, double effective_n);

/// Node i is significant when the origin lies outside the level-(1 - level)
/// normal ellipse of its replicate arrows: mean^T C^-1 mean exceeds
/// significance_threshold. With a singular C the test falls back to
/// componentwise percentile intervals: significant when the rectangle they
/// span excludes the origin.
bool node_significant(const std::vector<Vec2> &arrows, const SignificanceOptions &options = {},
                      double effective_n = INFINITY);

/// Per-node flags. `effective_n` holds the point estimate's effective
/// sample sizes; empty means the large-sample threshold everywhere.
std::vector<std::uint8_t> flag_significance(const BootstrapEnsemble &ensemble, std::span<const double> effective_n = {},
                                            const SignificanceOptions &options = {});

/// Fills field.significant and field.direction_variance from the ensemble.
void annotate_field(VectorFieldGrid &field, const BootstrapEnsemble &ensemble,
                    const SignificanceOptions &options = {});

struct Attractor {
  std::size_t id = 0;
  Vec2 center;
  double radius = 0.0;
  std::string label;
  std::size_t members = 0;
};

struct AttractorOptions {
  double horizon = 500.0;
  double step = 0.1;
  /// Early stop when one step moves less than this.
  double stop_tolerance = 1e-6;
  /// Single-linkage distance for grouping terminal points.
  double merge_radius = 0.5;
  /// Minimum share of units for a cluster to count as an attractor.
  double min_share = 0.01;
  /// Lower bound on attractor radii.
  double min_radius = 0.25;
  /// Terminal points within assign_factor * radius of a center belong to it.
  double assign_factor = 1.5;
  /// Ascending-own-axis order; empty means automatic labels.
  std::vector<std::string> labels;
};

struct AttractorSearch {
  std::vector<Attractor> attractors;
  std::vector<Vec2> terminals;
  /// Index into attractors, or -1 when unresolved.
  std::vector<int> assignment;
};

/// Integrates every start for a long horizon and clusters the terminal
/// points. Attractors are ordered by center on the own axis. Throws
/// DomainError when no cluster reaches the minimum share.
AttractorSearch find_attractors(const VectorFieldGrid &field, const std::vector<Vec2> &starts,
                                const AttractorOptions &options = {});

/// Groups of indices whose points are connected by links shorter than
/// `radius`. Groups and their members are sorted.
std::vector<std::vector<std::size_t>> single_linkage(const std::vector<Vec2> &points, double radius);

/// Labels by ascending own-axis center: {rural, suburban, urban} when there
/// are exactly three, A1..An otherwise.
std::vector<std::string> default_labels(std::size_t count);

/// Nearest attractor whose assignment radius contains z, or -1.
int assign_to_attractor(const std::vector<Attractor> &attractors, const Vec2 &z, double assign_factor);

struct ShareBand {
  double point = 0.0;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct AttractorReport {
  std::vector<Attractor> attractors;
  std::vector<std::size_t> units;
  /// probability[k][a]: share of replicates sending unit k to attractor a.
  std::vector<std::vector<double>> probability;
  std::vector<double> unresolved;
  /// Point-estimate assignment of each unit (-1 unresolved).
  std::vector<int> point_assignment;
  std::vector<ShareBand> unit_share;
  std::vector<ShareBand> population_share;
  ShareBand unresolved_unit_share;
  ShareBand unresolved_population_share;
  std::size_t replicates_used = 0;
  double band_level = 0.90;

  /// Most likely outcome per unit: attractor index, or -1 when the
  /// unresolved share is larger than every attractor's probability.
  int modal_class(std::size_t k) const;
};

/// Integrates each start under every non-degenerate replicate field and
/// tallies attractor assignments. Shares are weighted by unit count and by
/// `population`; bands are the 5th/95th percentiles of replicate shares.
AttractorReport basin_probabilities(const BootstrapEnsemble &ensemble, const AttractorSearch &search,
                                    const std::vector<Vec2> &starts, const std::vector<std::size_t> &units,
                                    const std::vector<double> &population, const AttractorOptions &options = {});

nlohmann::json report_json(const AttractorReport &report, const std::vector<std::string> &unit_ids);

struct OverlayCell {
  std::string attractor;
  bool program_flag = false;
  std::size_t n_units = 0;
  double population = 0.0;
};

struct OverlayTable {
  std::vector<OverlayCell> cells;
  std::vector<std::string> unknown_ids;
};

/// Cross-tabulates modal attractor class against program membership.
/// Units absent from `membership` count as not flagged; membership ids not
/// in the report are listed in unknown_ids.
OverlayTable policy_overlay(const AttractorReport &report, const std::vector<std::string> &unit_ids,
                            const std::vector<double> &population, const std::map<std::string, bool> &membership);

/// unit_id,program_flag with flag values 1/0/true/false/yes/no.
std::map<std::string, bool> read_membership_csv(const std::filesystem::path &path);
void write_overlay_csv(std::ostream &out, const OverlayTable &table);

}  // namespace rvf
