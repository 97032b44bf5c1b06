#include "rvf/panel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "rvf/csv.hpp"
#include "rvf/error.hpp"

namespace rvf {

const char *to_string(DropReason r) {
  switch (r) {
    case DropReason::ZeroPopulation: return "zero_population";
    case DropReason::IncompleteYears: return "incomplete_years";
    case DropReason::NoReferenceArea: return "no_reference_area";
  }
  return "unknown";
}

void to_json(nlohmann::json &j, const IngestReport &report) {
  j = nlohmann::json::array();
  for (const auto &d : report.dropped)
    j.push_back({{"unit_id", d.unit_id}, {"reason", to_string(d.reason)}, {"detail", d.detail}});
}

std::size_t Panel::year_index(int year) const {
  if (years_.empty() || !has_year(year))
    throw DomainError("year " + std::to_string(year) + " outside panel");
  return static_cast<std::size_t>(year - first_year());
}

std::vector<double> Panel::log_density_column(int year) const {
  const auto t = year_index(year);
  std::vector<double> out(units_.size());
  for (std::size_t i = 0; i < units_.size(); ++i) out[i] = log_density(i, t);
  return out;
}

std::vector<std::int64_t> Panel::population_column(int year) const {
  const auto t = year_index(year);
  std::vector<std::int64_t> out(units_.size());
  for (std::size_t i = 0; i < units_.size(); ++i) out[i] = population(i, t);
  return out;
}

const ZonePartition &Panel::partition_for(int year) const {
  for (const auto &p : partitions_)
    if (p.covers(year)) return p;
  throw DomainError("no zone partition valid in " + std::to_string(year));
}

std::optional<std::size_t> Panel::find_unit(const std::string &id) const {
  auto it = std::lower_bound(units_.begin(), units_.end(), id);
  if (it == units_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - units_.begin());
}

struct PanelBuilder {
  static Panel build(std::vector<std::string> units, std::vector<int> years, std::vector<double> log_density,
                     std::vector<std::int64_t> population, std::vector<double> area,
                     std::vector<ZonePartition> partitions) {
    Panel p;
    p.units_ = std::move(units);
    p.years_ = std::move(years);
    p.log_density_ = std::move(log_density);
    p.population_ = std::move(population);
    p.area_ = std::move(area);
    p.partitions_ = std::move(partitions);
    return p;
  }
};

namespace {

class CrosswalkIndex {
 public:
  explicit CrosswalkIndex(const Crosswalk &cw) {
    for (const auto &m : cw.mappings) {
      if (m.year_from > m.year_to)
        throw InputError("crosswalk: empty year range for " + m.source_unit_id);
      by_source_[m.source_unit_id].push_back(&m);
    }
    for (auto &[src, list] : by_source_) {
      std::sort(list.begin(), list.end(), [](auto *a, auto *b) { return a->year_from < b->year_from; });
      for (std::size_t i = 1; i < list.size(); ++i)
        if (list[i]->year_from <= list[i - 1]->year_to)
          throw InputError("crosswalk: overlapping year ranges for source " + src);
    }
  }

  /// Follows the mapping chain at `year` to a fixed point.
  std::string resolve(const std::string &id, int year) const {
    std::string cur = id;
    for (int hop = 0; hop < 64; ++hop) {
      const auto *next = lookup(cur, year);
      if (!next || *next == cur) return cur;
      cur = *next;
    }
    throw InputError("crosswalk: mapping cycle involving " + id);
  }

 private:
  const std::string *lookup(const std::string &id, int year) const {
    auto it = by_source_.find(id);
    if (it == by_source_.end()) return nullptr;
    for (const auto *m : it->second)
      if (year >= m->year_from && year <= m->year_to) return &m->target_unit_id;
    return nullptr;
  }

  std::unordered_map<std::string, std::vector<const CrosswalkEntry *>> by_source_;
};

void check_records(const std::vector<UnitRecord> &records) {
  std::set<std::pair<std::string, int>> seen;
  for (const auto &r : records) {
    if (!(r.area_km2 > 0.0) || !std::isfinite(r.area_km2))
      throw InputError("non-positive area for " + r.unit_id + " in " + std::to_string(r.year));
    if (r.population < 0)
      throw InputError("negative population for " + r.unit_id + " in " + std::to_string(r.year));
    if (!seen.emplace(r.unit_id, r.year).second)
      throw InputError("duplicate row for " + r.unit_id + " in " + std::to_string(r.year));
  }
}

int reference_year_of(const std::vector<UnitRecord> &records, const Crosswalk &cw) {
  if (cw.reference_year != 0) return cw.reference_year;
  int ref = records.front().year;
  for (const auto &r : records) ref = std::max(ref, r.year);
  return ref;
}

}  // namespace

std::vector<UnitRecord> harmonize(const std::vector<UnitRecord> &records, const Crosswalk &crosswalk) {
  check_records(records);
  if (records.empty()) return {};
  const CrosswalkIndex index(crosswalk);

  std::map<std::pair<std::string, int>, UnitRecord> merged;
  for (const auto &r : records) {
    const auto target = index.resolve(r.unit_id, r.year);
    auto [it, inserted] = merged.try_emplace({target, r.year}, UnitRecord{target, r.year, 0, 0.0});
    it->second.population += r.population;
    it->second.area_km2 += r.area_km2;
  }

  const int ref_year = reference_year_of(records, crosswalk);
  std::set<std::string> reference_units;
  for (const auto &[key, rec] : merged)
    if (key.second == ref_year) reference_units.insert(key.first);
  for (const auto &m : crosswalk.mappings) {
    const auto final_target = index.resolve(m.target_unit_id, ref_year);
    if (!reference_units.count(final_target))
      throw InputError("crosswalk: target " + m.target_unit_id + " absent from reference year " +
                       std::to_string(ref_year));
  }

  std::vector<UnitRecord> out;
  out.reserve(merged.size());
  for (auto &[key, rec] : merged) out.push_back(std::move(rec));
  return out;
}

IngestResult ingest_panel(const std::vector<UnitRecord> &records, const Crosswalk &crosswalk,
                          const std::vector<ZonePartition> &partitions, const IngestOptions &options) {
  if (records.empty()) throw InputError("no panel records");
  const auto harmonized = harmonize(records, crosswalk);
  const int ref_year = reference_year_of(records, crosswalk);

  std::set<int> year_set;
  for (const auto &r : harmonized) year_set.insert(r.year);
  if (year_set.size() < 2) throw InputError("panel must cover at least two distinct years");
  const std::vector<int> all_years(year_set.begin(), year_set.end());
  for (std::size_t i = 1; i < all_years.size(); ++i)
    if (all_years[i] != all_years[i - 1] + 1)
      throw InputError("panel years are not contiguous: gap after " + std::to_string(all_years[i - 1]));

  const int start = options.window_start.value_or(all_years.front());
  const int end = options.window_end.value_or(all_years.back());
  if (start >= end) throw DomainError("empty window");
  if (start < all_years.front() || end > all_years.back())
    throw DomainError("window " + std::to_string(start) + ":" + std::to_string(end) + " outside panel years");
  std::vector<int> years;
  for (int y = start; y <= end; ++y) years.push_back(y);
  const std::size_t ny = years.size();

  for (std::size_t i = 0; i < partitions.size(); ++i) {
    if (partitions[i].valid_from > partitions[i].valid_to) throw InputError("partition with empty validity range");
    for (std::size_t k = i + 1; k < partitions.size(); ++k)
      if (partitions[i].valid_from <= partitions[k].valid_to && partitions[k].valid_from <= partitions[i].valid_to)
        throw InputError("zone partitions have overlapping validity ranges");
  }
  for (int y : years) {
    if (std::none_of(partitions.begin(), partitions.end(), [y](const auto &p) { return p.covers(y); }))
      throw InputError("no zone partition covers " + std::to_string(y));
  }

  // Group harmonized records per unit (harmonize output is sorted by unit, year).
  IngestReport report;
  std::vector<std::string> units;
  std::vector<double> log_density;
  std::vector<std::int64_t> population;
  std::vector<double> area;

  std::size_t i = 0;
  while (i < harmonized.size()) {
    const auto &id = harmonized[i].unit_id;
    std::size_t j = i;
    std::vector<const UnitRecord *> by_year(ny, nullptr);
    const UnitRecord *ref_record = nullptr;
    for (; j < harmonized.size() && harmonized[j].unit_id == id; ++j) {
      const auto &r = harmonized[j];
      if (r.year >= start && r.year <= end) by_year[static_cast<std::size_t>(r.year - start)] = &r;
      if (r.year == ref_year) ref_record = &r;
    }
    i = j;

    const auto missing = std::count(by_year.begin(), by_year.end(), nullptr);
    if (missing > 0) {
      report.dropped.push_back({id, DropReason::IncompleteYears,
                                std::to_string(missing) + " of " + std::to_string(ny) + " window years missing"});
      continue;
    }
    auto zero = std::find_if(by_year.begin(), by_year.end(), [](auto *r) { return r->population == 0; });
    if (zero != by_year.end()) {
      report.dropped.push_back({id, DropReason::ZeroPopulation, "population 0 in " + std::to_string((*zero)->year)});
      report.warnings.push_back("dropped " + id + ": zero population in " + std::to_string((*zero)->year));
      continue;
    }
    if (!ref_record) {
      report.dropped.push_back(
          {id, DropReason::NoReferenceArea, "no record in reference year " + std::to_string(ref_year)});
      continue;
    }
    for (int y : years) {
      bool zoned = false;
      for (const auto &p : partitions)
        if (p.covers(y) && p.zone_of.count(id)) zoned = true;
      if (!zoned) throw InputError("unit " + id + " has no zone in " + std::to_string(y));
    }

    const double a = ref_record->area_km2;
    units.push_back(id);
    area.push_back(a);
    for (const auto *r : by_year) {
      population.push_back(r->population);
      log_density.push_back(std::log(static_cast<double>(r->population) / a));
    }
  }
  if (units.empty()) throw DomainError("no units survive ingestion");

  std::vector<ZonePartition> kept;
  for (const auto &p : partitions)
    if (p.valid_to >= start && p.valid_from <= end) kept.push_back(p);

  return {PanelBuilder::build(std::move(units), std::move(years), std::move(log_density), std::move(population),
                              std::move(area), std::move(kept)),
          std::move(report)};
}

Panel select_window(const Panel &panel, int start, int end) {
  if (start >= end) throw DomainError("empty window");
  if (!panel.has_year(start) || !panel.has_year(end))
    throw DomainError("window " + std::to_string(start) + ":" + std::to_string(end) + " outside panel years " +
                      std::to_string(panel.first_year()) + ":" + std::to_string(panel.last_year()));
  const auto t0 = panel.year_index(start);
  const auto ny = static_cast<std::size_t>(end - start + 1);
  std::vector<int> years;
  for (int y = start; y <= end; ++y) years.push_back(y);

  std::vector<std::string> units;
  std::vector<double> log_density;
  std::vector<std::int64_t> population;
  std::vector<double> area;
  for (std::size_t u = 0; u < panel.unit_count(); ++u) {
    bool complete = true;
    for (std::size_t k = 0; k < ny; ++k)
      if (!std::isfinite(panel.log_density(u, t0 + k))) complete = false;
    if (!complete) continue;
    units.push_back(panel.units()[u]);
    area.push_back(panel.area(u));
    for (std::size_t k = 0; k < ny; ++k) {
      log_density.push_back(panel.log_density(u, t0 + k));
      population.push_back(panel.population(u, t0 + k));
    }
  }
  if (units.empty()) throw DomainError("no units survive the window");

  std::vector<ZonePartition> kept;
  for (const auto &p : panel.partitions())
    if (p.valid_to >= start && p.valid_from <= end) kept.push_back(p);
  return PanelBuilder::build(std::move(units), std::move(years), std::move(log_density), std::move(population),
                             std::move(area), std::move(kept));
}

std::vector<UnitRecord> read_panel_csv(const std::filesystem::path &path) {
  const auto t = csv::read(path, {"unit_id", "year", "population", "area_km2"});
  std::vector<UnitRecord> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto &row = t.rows[r];
    const auto line = t.lines[r];
    out.push_back({row[0], static_cast<int>(csv::to_int(row[1], "year", line)), csv::to_int(row[2], "population", line),
                   csv::to_double(row[3], "area_km2", line)});
  }
  return out;
}

Crosswalk read_crosswalk_csv(const std::filesystem::path &path, int reference_year) {
  const auto t = csv::read(path, {"source_unit_id", "target_unit_id", "year_from", "year_to"});
  Crosswalk cw;
  cw.reference_year = reference_year;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto &row = t.rows[r];
    const auto line = t.lines[r];
    cw.mappings.push_back({row[0], row[1], static_cast<int>(csv::to_int(row[2], "year_from", line)),
                           static_cast<int>(csv::to_int(row[3], "year_to", line))});
  }
  return cw;
}

std::vector<ZonePartition> read_partitions_csv(const std::filesystem::path &path) {
  const auto t = csv::read(path, {"unit_id", "zone_id", "valid_from", "valid_to"});
  std::map<std::pair<int, int>, ZonePartition> by_range;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto &row = t.rows[r];
    const auto line = t.lines[r];
    const int from = static_cast<int>(csv::to_int(row[2], "valid_from", line));
    const int to = static_cast<int>(csv::to_int(row[3], "valid_to", line));
    auto &p = by_range[{from, to}];
    p.valid_from = from;
    p.valid_to = to;
    if (!p.zone_of.emplace(row[0], row[1]).second)
      throw InputError(path.string() + ":" + std::to_string(line) + ": unit " + row[0] +
                       " assigned twice in the same partition");
  }
  std::vector<ZonePartition> out;
  for (auto &[k, p] : by_range) out.push_back(std::move(p));
  return out;
}

}  // namespace rvf
