#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "rvf/geometry.hpp"
#include "rvf/moran.hpp"
#include "rvf/panel.hpp"

/// Generators with known ground truth, used by the test suites and by the
/// fixture tool.
namespace rvf::synthetic {

/// Standard normal draw from raw engine output (Box-Muller), so fixtures do
/// not depend on the standard library's distribution implementations.
double normal(std::mt19937_64 &rng);
double uniform(std::mt19937_64 &rng, double lo, double hi);

/// Expected one-horizon displacement of the double-well flow
/// 0.2 * (x - x^3/4, -y), with stable points (+-2, 0).
Vec2 double_well(const Vec2 &z);
/// Basin of the double-well flow: 0 for x < 0 (left well), 1 otherwise.
int double_well_basin(const Vec2 &z);

/// Starts uniform on [-3.5, 3.5] x [-2, 2]; delta = double_well(start)
/// plus isotropic Gaussian noise of scale sigma.
std::vector<Transition> double_well_transitions(std::size_t n, double sigma, std::uint64_t seed);

/// Starts uniform on the unit square; zero-mean isotropic noise deltas.
std::vector<Transition> noise_transitions(std::size_t n, double sigma, std::uint64_t seed);

struct PanelSpec {
  std::size_t zones = 60;
  std::size_t min_zone_size = 3;
  std::size_t max_zone_size = 14;
  int first_year = 1984;
  int last_year = 2019;
  /// First year of the second partition; 0 for a single partition.
  int switch_year = 2002;
  /// Share of zones merged pairwise (high with low) in the second partition.
  double merge_share = 0.5;
  /// Years whose populations are copied from the previous year.
  std::vector<int> frozen_years;
  /// Split a few units into two historical parts before this year (0 = no
  /// crosswalk entries).
  int split_until = 1995;
  std::uint64_t seed = 7;
};

struct PanelFixture {
  std::vector<UnitRecord> records;
  Crosswalk crosswalk;
  std::vector<ZonePartition> partitions;
};

/// Zone-clustered log densities with mean reversion inside zones and
/// divergent zone trends. A later partition merges heterogeneous zones,
/// lowering spatial autocorrelation from `switch_year`.
PanelFixture make_panel(const PanelSpec &spec);

/// Writes panel.csv, crosswalk.csv and partitions.csv into `dir`.
void write_fixture(const std::filesystem::path &dir, const PanelFixture &fixture);

}  // namespace rvf::synthetic
