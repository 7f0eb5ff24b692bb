#include "coldsim/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace coldsim {

namespace {

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write report file: " + path.string());
  return out;
}

void write_activity(const RunReport& report, const std::filesystem::path& dir) {
  auto out = open_csv(dir / "activity.csv");
  out << "cycle,time_ms,young_regions,unpinned_regions,pinned_regions,cold_regions,"
         "refs_young,refs_unpinned,refs_pinned,refs_cold,"
         "prop_young,prop_unpinned,prop_pinned,prop_cold\n";
  for (const CycleRow& row : report.rows) {
    const std::uint64_t total =
        row.refs_young + row.refs_unpinned + row.refs_pinned + row.refs_cold;
    auto prop = [&](std::uint64_t n) {
      return total == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(total);
    };
    out << row.cycle << ',' << row.time << ',' << row.young_regions << ','
        << row.unpinned_regions << ',' << row.pinned_regions << ','
        << row.cold_regions << ',' << row.refs_young << ',' << row.refs_unpinned
        << ',' << row.refs_pinned << ',' << row.refs_cold << ','
        << fixed9(prop(row.refs_young)) << ',' << fixed9(prop(row.refs_unpinned))
        << ',' << fixed9(prop(row.refs_pinned)) << ',' << fixed9(prop(row.refs_cold))
        << '\n';
  }
}

void write_cold_events(const RunReport& report, const std::filesystem::path& dir) {
  auto out = open_csv(dir / "cold_events.csv");
  out << "cycle,time_ms,region,objects,bytes\n";
  for (const ColdEventRow& row : report.cold_events) {
    out << row.cycle << ',' << row.time << ',' << row.region << ',' << row.objects
        << ',' << row.bytes << '\n';
  }
}

void write_summary(const RunReport& report, const std::filesystem::path& dir) {
  auto out = open_csv(dir / "summary.csv");
  const RunSummary& s = report.summary;
  out << "key,value\n";
  out << "oracle_enabled," << (s.oracle_enabled ? 1 : 0) << '\n';
  out << "partial_cycles," << s.partial_cycles << '\n';
  out << "global_cycles," << s.global_cycles << '\n';
  out << "cold_events_objects," << s.cold_events_objects << '\n';
  out << "cold_events_bytes," << s.cold_events_bytes << '\n';
  out << "cold_reclaimed_objects," << s.cold_reclaimed_objects << '\n';
  out << "cold_reclaimed_bytes," << s.cold_reclaimed_bytes << '\n';
  out << "total_cold_objects," << s.total_cold_objects << '\n';
  out << "total_cold_bytes," << s.total_cold_bytes << '\n';
  out << "cold_area_ref_count," << s.cold_area_ref_count << '\n';
  out << "distinct_cold_objects_referenced," << s.distinct_cold_objects_referenced << '\n';
  out << "pin_events," << s.pin_events << '\n';
  out << "unpin_events," << s.unpin_events << '\n';
  out << "mean_pinned_regions," << fixed9(s.mean_pinned_regions) << '\n';
  out << "inactive_objects," << s.inactive_objects << '\n';
  out << "false_inactive_objects," << s.false_inactive_objects << '\n';
  out << "false_inactivity_ratio," << fixed9(s.false_inactivity_ratio) << '\n';
  out << "stack_collectible_episodes," << s.stack_collectible_episodes << '\n';
  out << "oracle_collectible_episodes," << s.oracle_collectible_episodes << '\n';
  out << "fully_included," << (s.fully_included ? 1 : 0) << '\n';
  out << "mean_stack_convergence_ms," << fixed9(s.mean_stack_convergence_ms) << '\n';
  out << "mean_oracle_convergence_ms," << fixed9(s.mean_oracle_convergence_ms) << '\n';
  out << "frames_walked," << s.frames_walked << '\n';
  out << "samples_harvested," << s.samples_harvested << '\n';
  out << "samples_discarded_stale," << s.samples_discarded_stale << '\n';
  out << "activity_bits_tested," << s.activity_bits_tested << '\n';
  out << "activity_bits_set," << s.activity_bits_set << '\n';
  out << "cold_ref_field_reads," << s.cold_ref_field_reads << '\n';
  out << "planted_cold_bytes," << s.planted_cold_bytes << '\n';
  out << "planted_cold_bytes_selectable," << s.planted_cold_bytes_selectable << '\n';
  out << "planted_cold_bytes_harvested," << s.planted_cold_bytes_harvested << '\n';
  out << "planted_hot_in_cold_area," << s.planted_hot_in_cold_area << '\n';
  out << "final_live_objects," << s.final_live_objects << '\n';
}

void write_convergence(const RunReport& report, const std::filesystem::path& dir) {
  auto out = open_csv(dir / "convergence.csv");
  out << "episode,region,t_pinned_ms,t_end_ms,end_reason,cold_collected,"
         "stack_collectible,oracle_collectible,stack_convergence_ms,"
         "oracle_convergence_ms,inactive_objects,false_inactive\n";
  for (const EpisodeRecord& e : report.episodes) {
    out << e.episode << ',' << e.region << ',' << e.t_pinned << ',' << e.t_end << ','
        << (e.end_reason ? to_string(*e.end_reason) : "run_end") << ','
        << (e.cold_collected ? 1 : 0) << ',' << (e.stack_collectible ? 1 : 0) << ','
        << (e.oracle_collectible ? 1 : 0) << ',';
    if (const auto c = convergence_time(e, Detector::StackSampling))
      out << *c;
    else
      out << "na";
    out << ',';
    if (const auto c = convergence_time(e, Detector::AccessBarrier))
      out << *c;
    else
      out << "na";
    out << ',' << e.inactive_objects << ',' << e.false_inactive << '\n';
  }
}

} // namespace

void emit_reports(const RunReport& report, const std::string& output_dir) {
  std::error_code ec;
  const std::filesystem::path dir(output_dir);
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory: " + output_dir);
  write_activity(report, dir);
  write_cold_events(report, dir);
  write_summary(report, dir);
  if (report.summary.oracle_enabled) write_convergence(report, dir);
}

} // namespace coldsim
