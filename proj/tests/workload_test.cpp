#include "coldsim/workload.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <unordered_set>

namespace coldsim {
namespace {

HeapConfig wl_heap_config() {
  HeapConfig c;
  c.region_size_bytes = 64 * 1024;
  c.region_count = 64;
  c.cold_region_count = 4;
  return c;
}

WorkloadSpec small_spec() {
  WorkloadSpec s;
  s.seed = 42;
  s.duration_ms = 400;
  s.thread_count = 2;
  s.alloc_rate = 2.0;
  s.size_min_bytes = 64;
  s.size_max_bytes = 256;
  s.hot_set_size = 50;
  s.hot_access_rate = 3.0;
  s.cold_set_size = 40;
  s.cold_access_rate = 0.0;
  s.call_depth_min = 2;
  s.call_depth_max = 6;
  s.frame_ref_fanout = 8;
  return s;
}

bool events_equal(const TraceEvent& a, const TraceEvent& b) {
  if (a.time != b.time || a.kind != b.kind || a.thread != b.thread ||
      a.object != b.object || a.size != b.size || a.surface != b.surface ||
      a.refs != b.refs || a.slots.size() != b.slots.size())
    return false;
  for (std::size_t i = 0; i < a.slots.size(); ++i)
    if (a.slots[i].is_ref != b.slots[i].is_ref || a.slots[i].value != b.slots[i].value)
      return false;
  return true;
}

TEST(WorkloadBuild, SameSpecYieldsIdenticalStreams) {
  auto a = build_workload(small_spec(), wl_heap_config());
  auto b = build_workload(small_spec(), wl_heap_config());
  for (SimTime now = 0; now < small_spec().duration_ms; ++now) {
    const auto& ea = a->step(now);
    const auto& eb = b->step(now);
    ASSERT_EQ(ea.size(), eb.size()) << "tick " << now;
    for (std::size_t i = 0; i < ea.size(); ++i)
      ASSERT_TRUE(events_equal(ea[i], eb[i])) << "tick " << now << " event " << i;
  }
}

TEST(WorkloadBuild, GroundTruthShapes) {
  auto wl = build_workload(small_spec(), wl_heap_config());
  const GroundTruth& gt = wl->ground_truth();
  EXPECT_EQ(gt.cold_ids.size(), 40u);
  EXPECT_EQ(gt.hot_ids.size(), 50u);
  std::unordered_set<ObjectId> cold(gt.cold_ids.begin(), gt.cold_ids.end());
  for (ObjectId id : gt.hot_ids) EXPECT_EQ(cold.count(id), 0u);
}

TEST(WorkloadBuild, EmptyColdSet) {
  WorkloadSpec s = small_spec();
  s.cold_set_size = 0;
  auto wl = build_workload(s, wl_heap_config());
  EXPECT_TRUE(wl->ground_truth().cold_ids.empty());
}

TEST(WorkloadBuild, ColdSetKindsAreCollectible) {
  auto wl = build_workload(small_spec(), wl_heap_config());
  std::unordered_set<ObjectId> cold(wl->ground_truth().cold_ids.begin(),
                                    wl->ground_truth().cold_ids.end());
  for (SimTime now = 0; now < 50; ++now) {
    for (const TraceEvent& ev : wl->step(now)) {
      if (ev.kind == EventKind::Alloc && cold.count(ev.object)) {
        EXPECT_TRUE(ev.obj_kind == ObjectKind::PrimitiveArray ||
                    ev.obj_kind == ObjectKind::Leaf);
        EXPECT_TRUE(ev.refs.empty());
      }
    }
  }
}

TEST(WorkloadBuild, OversizedColdSetIsInfeasible) {
  WorkloadSpec s = small_spec();
  HeapConfig h = wl_heap_config();
  h.region_count = 6;
  h.cold_region_count = 2;
  s.cold_set_size = 100'000; // far beyond four mutator regions
  EXPECT_THROW(build_workload(s, h), ConfigError);
}

TEST(WorkloadStep, ColdObjectsNeverAccessedAtZeroRate) {
  auto wl = build_workload(small_spec(), wl_heap_config());
  std::unordered_set<ObjectId> cold(wl->ground_truth().cold_ids.begin(),
                                    wl->ground_truth().cold_ids.end());
  for (SimTime now = 0; now < small_spec().duration_ms; ++now) {
    for (const TraceEvent& ev : wl->step(now)) {
      if (ev.kind == EventKind::Read || ev.kind == EventKind::Write)
        EXPECT_EQ(cold.count(ev.object), 0u);
    }
  }
}

TEST(WorkloadStep, ChurnRateIsDeterministicPerTick) {
  WorkloadSpec s = small_spec();
  s.alloc_rate = 2.0;
  s.hot_set_size = 4;
  s.cold_set_size = 4;
  auto wl = build_workload(s, wl_heap_config());
  // Setup finishes within the first tick for 8 planted objects.
  wl->step(0);
  for (SimTime now = 1; now < 50; ++now) {
    std::uint64_t allocs = 0;
    for (const TraceEvent& ev : wl->step(now))
      if (ev.kind == EventKind::Alloc) allocs += 1;
    EXPECT_EQ(allocs, 2u) << "tick " << now;
  }
}

TEST(WorkloadStep, KillsTargetLiveChurnExactlyOnce) {
  // A small heap keeps the churn budget low enough that kills begin well
  // within the run.
  HeapConfig h = wl_heap_config();
  h.region_count = 8;
  h.cold_region_count = 2;
  WorkloadSpec s = small_spec();
  s.alloc_rate = 4.0;
  auto wl = build_workload(s, h);
  std::unordered_set<ObjectId> live;
  std::unordered_set<ObjectId> killed;
  for (SimTime now = 0; now < s.duration_ms; ++now) {
    for (const TraceEvent& ev : wl->step(now)) {
      if (ev.kind == EventKind::Alloc) {
        EXPECT_TRUE(live.insert(ev.object).second);
      } else if (ev.kind == EventKind::Kill) {
        EXPECT_EQ(live.count(ev.object), 1u);
        EXPECT_TRUE(killed.insert(ev.object).second);
        live.erase(ev.object);
      }
    }
  }
  EXPECT_FALSE(killed.empty());
}

TEST(WorkloadStep, StackDepthStaysWithinBounds) {
  auto wl = build_workload(small_spec(), wl_heap_config());
  std::vector<std::int64_t> depth(small_spec().thread_count, 0);
  for (SimTime now = 0; now < small_spec().duration_ms; ++now) {
    for (const TraceEvent& ev : wl->step(now)) {
      if (ev.kind == EventKind::Push) depth[ev.thread] += 1;
      if (ev.kind == EventKind::Pop) depth[ev.thread] -= 1;
    }
    for (std::int64_t d : depth) {
      EXPECT_GE(d, 0);
      EXPECT_LE(d, small_spec().call_depth_max + 1);
    }
  }
}

TEST(WorkloadTrace, RecordReplayRoundTrip) {
  auto original = build_workload(small_spec(), wl_heap_config());
  std::ostringstream sink;
  TraceWriter writer(sink, *original);
  std::vector<std::vector<TraceEvent>> recorded;
  for (SimTime now = 0; now < small_spec().duration_ms; ++now) {
    recorded.push_back(original->step(now));
    writer.append(recorded.back());
  }

  std::istringstream source(sink.str());
  auto replay = replay_trace(source);
  EXPECT_EQ(replay->duration_ms(), small_spec().duration_ms);
  EXPECT_EQ(replay->thread_count(), small_spec().thread_count);
  EXPECT_EQ(replay->ground_truth().cold_ids, original->ground_truth().cold_ids);
  EXPECT_EQ(replay->ground_truth().hot_ids, original->ground_truth().hot_ids);
  for (SimTime now = 0; now < small_spec().duration_ms; ++now) {
    const auto& events = replay->step(now);
    ASSERT_EQ(events.size(), recorded[now].size()) << "tick " << now;
    for (std::size_t i = 0; i < events.size(); ++i)
      ASSERT_TRUE(events_equal(events[i], recorded[now][i]));
  }
}

TEST(WorkloadTrace, HandWrittenFixtureYieldsExactEvents) {
  const std::string text =
      "coldsim-trace 1\n"
      "duration 3\n"
      "threads 1\n"
      "cold 1 2\n"
      "hot 1 1\n"
      "events\n"
      "0 push 0 2 p7 r1\n"
      "0 alloc 0 1 leaf 64 0\n"
      "1 alloc 0 2 pa 128 0\n"
      "1 read 0 1 1\n"
      "2 kill 1\n";
  std::istringstream in(text);
  auto wl = replay_trace(in);
  const auto& t0 = wl->step(0);
  ASSERT_EQ(t0.size(), 2u);
  EXPECT_EQ(t0[0].kind, EventKind::Push);
  ASSERT_EQ(t0[0].slots.size(), 2u);
  EXPECT_FALSE(t0[0].slots[0].is_ref);
  EXPECT_EQ(t0[0].slots[0].value, 7u);
  EXPECT_TRUE(t0[0].slots[1].is_ref);
  EXPECT_EQ(t0[1].kind, EventKind::Alloc);
  EXPECT_EQ(t0[1].obj_kind, ObjectKind::Leaf);
  const auto& t1 = wl->step(1);
  ASSERT_EQ(t1.size(), 2u);
  EXPECT_EQ(t1[0].obj_kind, ObjectKind::PrimitiveArray);
  EXPECT_EQ(t1[1].kind, EventKind::Read);
  EXPECT_TRUE(t1[1].surface);
  const auto& t2 = wl->step(2);
  ASSERT_EQ(t2.size(), 1u);
  EXPECT_EQ(t2[0].kind, EventKind::Kill);
  EXPECT_EQ(t2[0].object, 1u);
}

TEST(WorkloadTrace, MalformedInputNamesTheLine) {
  const std::string missing_header = "duration 5\nthreads 1\nevents\n";
  std::istringstream a(missing_header);
  EXPECT_THROW(replay_trace(a), ConfigError);

  const std::string bad_event =
      "coldsim-trace 1\nduration 5\nthreads 1\nevents\n0 frobnicate 1\n";
  std::istringstream b(bad_event);
  try {
    replay_trace(b);
    FAIL() << "expected a parse error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("trace:5"), std::string::npos) << e.what();
  }

  const std::string truncated =
      "coldsim-trace 1\nduration 5\nthreads 1\nevents\n0 alloc 0 1 leaf\n";
  std::istringstream c(truncated);
  EXPECT_THROW(replay_trace(c), ConfigError);

  const std::string decreasing =
      "coldsim-trace 1\nduration 5\nthreads 1\nevents\n3 pop 0\n1 pop 0\n";
  std::istringstream d(decreasing);
  EXPECT_THROW(replay_trace(d), ConfigError);
}

TEST(WorkloadSpecValidation, RejectsBadMixAndRates) {
  WorkloadSpec s = small_spec();
  s.kind_mix_internal = 0.5; // mix sums to 1.3
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec();
  s.alloc_rate = -1;
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec();
  s.cold_access_rate = 10.0; // exceeds the hot rate
  EXPECT_THROW(s.validate(), ConfigError);
  s = small_spec();
  s.call_depth_min = 9;
  s.call_depth_max = 3;
  EXPECT_THROW(s.validate(), ConfigError);
}

} // namespace
} // namespace coldsim
