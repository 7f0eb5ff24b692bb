#ifndef COLDSIM_REPORT_HPP
#define COLDSIM_REPORT_HPP

#include <string>
#include <vector>

#include "coldsim/oracle.hpp"

namespace coldsim {

// One row per partial GC cycle: the heap's shape and where sampled
// references landed since the previous cycle.
struct CycleRow {
  std::uint64_t cycle = 0;
  SimTime time = 0;
  std::uint32_t young_regions = 0;
  std::uint32_t unpinned_regions = 0;
  std::uint32_t pinned_regions = 0;
  std::uint32_t cold_regions = 0;
  std::uint64_t refs_young = 0;
  std::uint64_t refs_unpinned = 0;
  std::uint64_t refs_pinned = 0;
  std::uint64_t refs_cold = 0;
};

struct ColdEventRow {
  std::uint64_t cycle = 0;
  SimTime time = 0;
  RegionId region = 0;
  std::uint64_t objects = 0;
  std::uint64_t bytes = 0;
};

struct RunSummary {
  bool oracle_enabled = false;
  std::uint64_t partial_cycles = 0;
  std::uint64_t global_cycles = 0;
  std::uint64_t cold_events_objects = 0;  // gross harvested into the cold area
  std::uint64_t cold_events_bytes = 0;
  std::uint64_t cold_reclaimed_objects = 0; // garbage swept out of the cold area
  std::uint64_t cold_reclaimed_bytes = 0;
  std::uint64_t total_cold_objects = 0;   // net of reclamation
  std::uint64_t total_cold_bytes = 0;
  std::uint64_t cold_area_ref_count = 0;
  std::uint64_t distinct_cold_objects_referenced = 0;
  std::uint64_t pin_events = 0;
  std::uint64_t unpin_events = 0;
  double mean_pinned_regions = 0.0;
  std::uint64_t inactive_objects = 0;
  std::uint64_t false_inactive_objects = 0;
  double false_inactivity_ratio = 0.0;
  std::uint64_t stack_collectible_episodes = 0;
  std::uint64_t oracle_collectible_episodes = 0;
  bool fully_included = true;
  double mean_stack_convergence_ms = 0.0;
  double mean_oracle_convergence_ms = 0.0;
  // Detector-work counters.
  std::uint64_t frames_walked = 0;
  std::uint64_t samples_harvested = 0;
  std::uint64_t samples_discarded_stale = 0;
  std::uint64_t activity_bits_tested = 0;
  std::uint64_t activity_bits_set = 0;
  std::uint64_t cold_ref_field_reads = 0; // marking probe; must stay 0
  // Planted ground-truth diagnostics.
  std::uint64_t planted_cold_bytes = 0;
  std::uint64_t planted_cold_bytes_selectable = 0;
  std::uint64_t planted_cold_bytes_harvested = 0;
  std::uint64_t planted_hot_in_cold_area = 0;
  std::uint64_t final_live_objects = 0;
};

struct RunReport {
  std::vector<CycleRow> rows;
  std::vector<ColdEventRow> cold_events;
  std::vector<EpisodeRecord> episodes;
  RunSummary summary;
};

// Writes activity.csv, cold_events.csv, summary.csv, and (when the oracle
// ran) convergence.csv under output_dir. Numbers are decimal text;
// proportions carry nine fractional digits. Output is byte-stable for a
// given report.
void emit_reports(const RunReport& report, const std::string& output_dir);

} // namespace coldsim

#endif // COLDSIM_REPORT_HPP
