#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace rvf {

/// One raw observation: a territorial unit in a given year.
struct UnitRecord {
  std::string unit_id;
  int year = 0;
  std::int64_t population = 0;
  double area_km2 = 0.0;
};

struct CrosswalkEntry {
  std::string source_unit_id;
  std::string target_unit_id;
  int year_from = 0;
  int year_to = 0;
};

/// Maps historical unit definitions onto the definitions in force in
/// `reference_year`. Units without an entry map to themselves.
struct Crosswalk {
  std::vector<CrosswalkEntry> mappings;
  /// 0 means "the last year present in the records".
  int reference_year = 0;
};

/// Assignment of units to zones, valid for the closed year range
/// [valid_from, valid_to].
struct ZonePartition {
  std::map<std::string, std::string> zone_of;
  int valid_from = 0;
  int valid_to = 0;

  bool covers(int year) const { return year >= valid_from && year <= valid_to; }
};

enum class DropReason { ZeroPopulation, IncompleteYears, NoReferenceArea };

const char *to_string(DropReason r);

struct DroppedUnit {
  std::string unit_id;
  DropReason reason = DropReason::IncompleteYears;
  std::string detail;
};

/// What ingestion removed and why. Retained units plus `dropped` account
/// for every harmonized input unit.
struct IngestReport {
  std::vector<DroppedUnit> dropped;
  std::vector<std::string> warnings;
};

void to_json(nlohmann::json &j, const IngestReport &report);

/// Harmonized unit-by-year panel of log population density. Immutable once
/// built; units are sorted by id and years are contiguous.
class Panel {
 public:
  std::size_t unit_count() const { return units_.size(); }
  std::size_t year_count() const { return years_.size(); }
  const std::vector<std::string> &units() const { return units_; }
  const std::vector<int> &years() const { return years_; }
  int first_year() const { return years_.front(); }
  int last_year() const { return years_.back(); }
  bool has_year(int year) const { return year >= first_year() && year <= last_year(); }

  /// Column index of `year`; throws DomainError when outside the panel.
  std::size_t year_index(int year) const;

  double log_density(std::size_t unit, std::size_t year_idx) const {
    return log_density_[unit * years_.size() + year_idx];
  }
  std::int64_t population(std::size_t unit, std::size_t year_idx) const {
    return population_[unit * years_.size() + year_idx];
  }
  double area(std::size_t unit) const { return area_[unit]; }

  /// log density of every unit in `year`, in unit order.
  std::vector<double> log_density_column(int year) const;
  std::vector<std::int64_t> population_column(int year) const;

  const std::vector<ZonePartition> &partitions() const { return partitions_; }
  /// The partition whose validity window contains `year`.
  const ZonePartition &partition_for(int year) const;

  std::optional<std::size_t> find_unit(const std::string &id) const;

 private:
  friend struct PanelBuilder;
  std::vector<std::string> units_;
  std::vector<int> years_;
  std::vector<double> log_density_;
  std::vector<std::int64_t> population_;
  std::vector<double> area_;
  std::vector<ZonePartition> partitions_;
};

struct IngestOptions {
  /// Restrict to [start, end] before checking completeness.
  std::optional<int> window_start;
  std::optional<int> window_end;
};

struct IngestResult {
  Panel panel;
  IngestReport report;
};

/// Applies the crosswalk: every record is re-keyed to its reference-year
/// unit and records sharing (unit, year) are merged by summing population
/// and area. Output is sorted by (unit_id, year).
std::vector<UnitRecord> harmonize(const std::vector<UnitRecord> &records, const Crosswalk &crosswalk);

/// Validates, harmonizes and assembles the panel. Units with a zero
/// population in any window year, or missing a window year, are dropped and
/// reported. Throws InputError on duplicate rows, non-positive area,
/// overlapping crosswalk ranges, gaps in the year sequence, or a retained
/// unit-year without a zone.
IngestResult ingest_panel(const std::vector<UnitRecord> &records, const Crosswalk &crosswalk,
                          const std::vector<ZonePartition> &partitions, const IngestOptions &options = {});

/// Restricts a panel to the closed window [start, end].
Panel select_window(const Panel &panel, int start, int end);

std::vector<UnitRecord> read_panel_csv(const std::filesystem::path &path);
Crosswalk read_crosswalk_csv(const std::filesystem::path &path, int reference_year = 0);
/// Rows sharing (valid_from, valid_to) form one partition.
std::vector<ZonePartition> read_partitions_csv(const std::filesystem::path &path);

}  // namespace rvf
