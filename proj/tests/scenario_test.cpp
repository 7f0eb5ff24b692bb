#include "coldsim/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace coldsim {
namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  EXPECT_TRUE(in) << p;
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// A scenario small enough for unit tests but large enough to tenure, pin,
// and cold collect.
ScenarioConfig test_scenario(std::uint64_t seed, PinningStrategy strategy) {
  ScenarioConfig c;
  c.heap.region_size_bytes = 64 * 1024;
  c.heap.region_count = 96;
  c.heap.cold_region_count = 8;
  c.heap.tenure_age = 6;
  c.policy.strategy = strategy;
  c.policy.t_cold_ms = 3000;
  c.policy.p_max = 128;
  c.policy.sum_r_floor = 48;
  c.gc.global_gc_every = 64;
  c.workload.seed = seed;
  c.workload.duration_ms = 20'000;
  c.workload.thread_count = 2;
  c.workload.alloc_rate = 4.0;
  c.workload.size_min_bytes = 64;
  c.workload.size_max_bytes = 256;
  c.workload.hot_set_size = 400;
  c.workload.hot_access_rate = 5.0;
  c.workload.cold_set_size = 400;
  c.workload.call_depth_min = 3;
  c.workload.call_depth_max = 12;
  return c;
}

TEST(ParseConfig, KeyValueEcho) {
  const auto c = parse_config("strategy = selective\nt_cold_ms = 900000\n");
  EXPECT_EQ(c.policy.strategy, PinningStrategy::Selective);
  EXPECT_EQ(c.policy.t_cold_ms, 900'000u);
}

TEST(ParseConfig, CommentsAndBlanksIgnored) {
  const auto c = parse_config("# a comment\n\n  seed = 9\n\n# another\noracle = true\n");
  EXPECT_EQ(c.workload.seed, 9u);
  EXPECT_TRUE(c.oracle_enabled);
}

TEST(ParseConfig, UnknownStrategyNamesLine) {
  try {
    parse_config("seed = 1\nstrategy = turbo\n");
    FAIL() << "expected a config error";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("unknown strategy"), std::string::npos) << what;
    EXPECT_NE(what.find("line 2"), std::string::npos) << what;
  }
}

TEST(ParseConfig, UnknownKeyNamesKeyAndLine) {
  try {
    parse_config("turbo_mode = 1\n");
    FAIL() << "expected a config error";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("turbo_mode"), std::string::npos) << what;
    EXPECT_NE(what.find("line 1"), std::string::npos) << what;
  }
}

TEST(ParseConfig, BadValueAndViolatedInvariant) {
  EXPECT_THROW(parse_config("p_max = soon\n"), ConfigError);
  EXPECT_THROW(parse_config("d_hi = 0.2\nd_lo = 0.5\n"), ConfigError);
  EXPECT_THROW(parse_config("this is not an assignment\n"), ConfigError);
}

TEST(RunScenario, StrategyNoneNeverPins) {
  ScenarioConfig c = test_scenario(3, PinningStrategy::None);
  const RunReport report = run_scenario(c);
  EXPECT_GT(report.rows.size(), 0u);
  for (const CycleRow& row : report.rows) EXPECT_EQ(row.pinned_regions, 0u);
  EXPECT_TRUE(report.cold_events.empty());
  EXPECT_EQ(report.summary.pin_events, 0u);
  EXPECT_EQ(report.summary.total_cold_bytes, 0u);
}

TEST(RunScenario, RegionClassCountsConserveTotal) {
  ScenarioConfig c = test_scenario(4, PinningStrategy::Unselective);
  c.workload.duration_ms = 10'000;
  const RunReport report = run_scenario(c);
  for (const CycleRow& row : report.rows) {
    EXPECT_EQ(row.young_regions + row.unpinned_regions + row.pinned_regions +
                  row.cold_regions,
              c.heap.region_count);
    EXPECT_LE(row.pinned_regions, c.policy.p_max);
  }
}

TEST(RunScenario, PlantedColdIsHarvested) {
  const RunReport report = run_scenario(test_scenario(5, PinningStrategy::Unselective));
  EXPECT_GT(report.summary.cold_events_bytes, 0u);
  EXPECT_GT(report.summary.planted_cold_bytes_harvested, 0u);
  EXPECT_LE(report.summary.planted_cold_bytes_harvested,
            report.summary.planted_cold_bytes);
  EXPECT_EQ(report.summary.planted_hot_in_cold_area, 0u);
  EXPECT_EQ(report.summary.cold_ref_field_reads, 0u);
}

TEST(RunScenario, SummaryCrossChecksColdEvents) {
  const RunReport report = run_scenario(test_scenario(6, PinningStrategy::Unselective));
  std::uint64_t event_bytes = 0;
  std::uint64_t event_objects = 0;
  for (const ColdEventRow& row : report.cold_events) {
    event_bytes += row.bytes;
    event_objects += row.objects;
  }
  EXPECT_EQ(event_bytes, report.summary.cold_events_bytes);
  EXPECT_EQ(event_objects, report.summary.cold_events_objects);
  EXPECT_EQ(report.summary.total_cold_bytes,
            report.summary.cold_events_bytes - report.summary.cold_reclaimed_bytes);
}

TEST(RunScenario, EpisodeConvergenceOrdering) {
  ScenarioConfig c = test_scenario(7, PinningStrategy::Unselective);
  c.oracle_enabled = true;
  const RunReport report = run_scenario(c);
  std::uint64_t collected = 0;
  for (const EpisodeRecord& e : report.episodes) {
    if (!e.cold_collected) continue;
    collected += 1;
    EXPECT_FALSE(e.collected_while_overflowed);
    EXPECT_GT(e.t_end - e.stack_last_transition, c.policy.t_cold_ms);
    EXPECT_LE(e.oracle_last_transition, e.stack_last_transition);
  }
  EXPECT_GT(collected, 0u);
  EXPECT_TRUE(report.summary.fully_included);
}

TEST(EmitReports, FilesRowCountsAndGating) {
  ScenarioConfig c = test_scenario(8, PinningStrategy::Unselective);
  c.workload.duration_ms = 10'000;
  c.oracle_enabled = true;
  const RunReport report = run_scenario(c);
  const auto dir = std::filesystem::temp_directory_path() / "coldsim_emit_test";
  std::filesystem::remove_all(dir);
  emit_reports(report, dir.string());

  const std::string activity = read_file(dir / "activity.csv");
  const auto lines = std::count(activity.begin(), activity.end(), '\n');
  EXPECT_EQ(static_cast<std::size_t>(lines), report.rows.size() + 1);
  EXPECT_TRUE(std::filesystem::exists(dir / "cold_events.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "summary.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "convergence.csv"));

  // Reference-class proportions add to one on rows with any references.
  std::istringstream rows(activity);
  std::string line;
  std::getline(rows, line); // header
  while (std::getline(rows, line)) {
    std::vector<std::string> fields;
    std::istringstream fs(line);
    std::string field;
    while (std::getline(fs, field, ',')) fields.push_back(field);
    ASSERT_EQ(fields.size(), 14u);
    const std::uint64_t refs = std::stoull(fields[6]) + std::stoull(fields[7]) +
                               std::stoull(fields[8]) + std::stoull(fields[9]);
    if (refs == 0) continue;
    const double sum = std::stod(fields[10]) + std::stod(fields[11]) +
                       std::stod(fields[12]) + std::stod(fields[13]);
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }

  // Without the oracle the convergence file is not produced.
  ScenarioConfig no_oracle = test_scenario(8, PinningStrategy::Unselective);
  no_oracle.workload.duration_ms = 6'000;
  const RunReport plain = run_scenario(no_oracle);
  const auto dir2 = std::filesystem::temp_directory_path() / "coldsim_emit_test2";
  std::filesystem::remove_all(dir2);
  emit_reports(plain, dir2.string());
  EXPECT_FALSE(std::filesystem::exists(dir2 / "convergence.csv"));
}

TEST(EmitReports, UnwritableDirectoryIsAnIoError) {
  const RunReport report;
  EXPECT_THROW(emit_reports(report, "/proc/definitely/not/writable"), IoError);
}

TEST(RunScenario, ByteIdenticalAcrossRuns) {
  ScenarioConfig c = test_scenario(9, PinningStrategy::Unselective);
  c.workload.duration_ms = 12'000;
  c.oracle_enabled = true;
  const auto dir_a = std::filesystem::temp_directory_path() / "coldsim_det_a";
  const auto dir_b = std::filesystem::temp_directory_path() / "coldsim_det_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
  emit_reports(run_scenario(c), dir_a.string());
  emit_reports(run_scenario(c), dir_b.string());
  for (const char* name :
       {"activity.csv", "cold_events.csv", "summary.csv", "convergence.csv"}) {
    EXPECT_EQ(read_file(dir_a / name), read_file(dir_b / name)) << name;
  }
}

TEST(RunScenario, TraceReplayReproducesRun) {
  ScenarioConfig c = test_scenario(10, PinningStrategy::Unselective);
  c.workload.duration_ms = 8'000;
  c.oracle_enabled = true;
  const auto trace_path =
      (std::filesystem::temp_directory_path() / "coldsim_replay.trace").string();
  c.record_trace_path = trace_path;
  const auto dir_a = std::filesystem::temp_directory_path() / "coldsim_rec";
  const auto dir_b = std::filesystem::temp_directory_path() / "coldsim_rep";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
  emit_reports(run_scenario(c), dir_a.string());

  ScenarioConfig r = c;
  r.record_trace_path.clear();
  r.replay_trace_path = trace_path;
  emit_reports(run_scenario(r), dir_b.string());
  for (const char* name :
       {"activity.csv", "cold_events.csv", "summary.csv", "convergence.csv"}) {
    EXPECT_EQ(read_file(dir_a / name), read_file(dir_b / name)) << name;
  }
}

} // namespace
} // namespace coldsim
