#include "coldsim/oracle.hpp"

#include <gtest/gtest.h>

#include <random>

#include "coldsim/sampling.hpp"

namespace coldsim {
namespace {

HeapConfig oracle_heap_config() {
  HeapConfig c;
  c.region_size_bytes = 16 * 1024;
  c.region_count = 16;
  c.cold_region_count = 2;
  return c;
}

void make_tenured(Heap& heap, RegionId id) {
  Region& r = heap.region_mut(id);
  r.age = heap.config().tenure_age;
  r.state = RegionState::Unpinned;
}

TEST(RecordAccess, BitTransitionsOnceTimestampAdvances) {
  Heap heap(oracle_heap_config());
  const ObjectId id = *heap.allocate(ObjectKind::Leaf, 64, {}, 0);
  make_tenured(heap, 0);
  AccessOracle oracle(heap);
  heap.pin_region(0, 10);
  oracle.on_pin(0, 10);

  oracle.record_access(heap, id, 20);
  EXPECT_TRUE(oracle.active(0, id));
  EXPECT_EQ(oracle.last_transition(0), 20u);
  EXPECT_EQ(oracle.last_access_time(id), std::optional<SimTime>(20));

  oracle.record_access(heap, id, 30);
  EXPECT_TRUE(oracle.active(0, id));
  EXPECT_EQ(oracle.last_transition(0), 20u); // idempotent on the bit
  EXPECT_EQ(oracle.last_access_time(id), std::optional<SimTime>(30));
}

TEST(RecordAccess, YoungRegionOnlyTracksTimestamp) {
  Heap heap(oracle_heap_config());
  const ObjectId id = *heap.allocate(ObjectKind::Leaf, 64, {}, 0);
  AccessOracle oracle(heap);
  oracle.record_access(heap, id, 5);
  EXPECT_FALSE(oracle.active(0, id));
  EXPECT_EQ(oracle.last_access_time(id), std::optional<SimTime>(5));
}

TEST(RecordAccess, ColdRegionsInstrumentedFromTheStart) {
  Heap heap(oracle_heap_config());
  const ObjectId id = *heap.allocate(ObjectKind::PrimitiveArray, 64, {}, 0);
  const RegionId cold = heap.regions_in_state(RegionState::Cold).front();
  ASSERT_TRUE(heap.move_object(id, cold));
  AccessOracle oracle(heap);
  oracle.record_access(heap, id, 7);
  EXPECT_TRUE(oracle.active(cold, id));
}

TEST(FalseInactivity, PublishedRatios) {
  // 1,117 false among 68,940 inactive objects.
  std::vector<ObjectId> inactive;
  std::unordered_set<ObjectId> oracle_active;
  for (ObjectId id = 1; id <= 68'940; ++id) inactive.push_back(id);
  for (ObjectId id = 1; id <= 1'117; ++id) oracle_active.insert(id);
  auto r = false_inactivity(inactive, oracle_active, 68'940);
  EXPECT_EQ(r.count, 1'117u);
  EXPECT_NEAR(r.ratio, 0.0162, 5e-5); // 1.62%

  // 1,191 false among 376,545 inactive objects.
  inactive.clear();
  oracle_active.clear();
  for (ObjectId id = 1; id <= 376'545; ++id) inactive.push_back(id);
  for (ObjectId id = 1; id <= 1'191; ++id) oracle_active.insert(id);
  r = false_inactivity(inactive, oracle_active, 376'545);
  EXPECT_EQ(r.count, 1'191u);
  EXPECT_NEAR(r.ratio, 0.0032, 5e-5); // 0.32%
}

TEST(FalseInactivity, EmptyIntersectionAndEmptyDenominator) {
  const auto perfect = false_inactivity({1, 2, 3}, {9, 10}, 3);
  EXPECT_EQ(perfect.count, 0u);
  EXPECT_DOUBLE_EQ(perfect.ratio, 0.0);
  const auto empty = false_inactivity({}, {}, 0);
  EXPECT_EQ(empty.count, 0u);
  EXPECT_DOUBLE_EQ(empty.ratio, 0.0);
}

EpisodeRecord collected_episode(SimTime t_pinned, SimTime stack_last,
                                SimTime oracle_last, SimTime t_end) {
  EpisodeRecord e;
  e.episode = 1;
  e.region = 3;
  e.t_pinned = t_pinned;
  e.t_end = t_end;
  e.end_reason = UnpinReason::WentCold;
  e.cold_collected = true;
  e.stack_last_transition = stack_last;
  e.oracle_last_transition = oracle_last;
  e.stack_collectible = true;
  e.oracle_collectible = true;
  e.oracle_enabled = true;
  return e;
}

TEST(ConvergenceTime, NeverReferencedRegionConvergesInstantly) {
  const auto e = collected_episode(500, 500, 500, 99'000);
  EXPECT_EQ(convergence_time(e, Detector::StackSampling), std::optional<SimTime>(0));
  EXPECT_EQ(convergence_time(e, Detector::AccessBarrier), std::optional<SimTime>(0));
}

TEST(ConvergenceTime, SingleLateReference) {
  const auto e = collected_episode(1'000, 61'000, 60'500, 999'000);
  EXPECT_EQ(convergence_time(e, Detector::StackSampling), std::optional<SimTime>(60'000));
  EXPECT_EQ(convergence_time(e, Detector::AccessBarrier), std::optional<SimTime>(59'500));
}

TEST(ConvergenceTime, ScriptedAccessesMatchLastTransitionOffset) {
  // Replay a scripted access sequence through the oracle and confirm the
  // last-transition bookkeeping matches the script's final first-sight.
  Heap heap(oracle_heap_config());
  std::vector<ObjectId> ids;
  for (int i = 0; i < 5; ++i)
    ids.push_back(*heap.allocate(ObjectKind::Leaf, 64, {}, 0));
  make_tenured(heap, 0);
  AccessOracle oracle(heap);
  heap.pin_region(0, 100);
  oracle.on_pin(0, 100);
  const SimTime script[][2] = {
      {0, 150}, {1, 300}, {0, 450}, {2, 900}, {1, 1000}, {0, 1100},
  };
  SimTime expected_last = 100;
  std::unordered_set<ObjectId> seen;
  for (const auto& [idx, when] : script) {
    oracle.record_access(heap, ids[idx], when);
    if (seen.insert(ids[idx]).second) expected_last = when;
  }
  EXPECT_EQ(oracle.last_transition(0), expected_last); // 900: last first-sight
  EXPECT_EQ(expected_last, 900u);
}

TEST(ConvergenceTime, NotConvergedIsMarked) {
  EpisodeRecord e = collected_episode(1'000, 2'000, 1'500, 3'000);
  e.stack_collectible = false;
  EXPECT_EQ(convergence_time(e, Detector::StackSampling), std::nullopt);
  EXPECT_TRUE(convergence_time(e, Detector::AccessBarrier).has_value());
}

TEST(CompareDetectors, SelfComparisonIsEqualAndIncluded) {
  std::vector<EpisodeRecord> episodes;
  for (std::uint64_t i = 1; i <= 4; ++i) {
    EpisodeRecord e = collected_episode(100, 200 + i, 200 + i, 10'000);
    e.episode = i;
    episodes.push_back(e);
  }
  const auto report = compare_detectors(episodes);
  EXPECT_TRUE(report.fully_included);
  EXPECT_EQ(report.stack_collectible_episodes, report.oracle_collectible_episodes);
  ASSERT_EQ(report.common.size(), 4u);
  for (const auto& pair : report.common) EXPECT_EQ(pair.stack_ms, pair.oracle_ms);
}

TEST(CompareDetectors, VacuousInclusionWithNoColdRegions) {
  std::vector<EpisodeRecord> episodes;
  EpisodeRecord e = collected_episode(100, 90'000, 90'000, 91'000);
  e.cold_collected = false;
  e.end_reason = UnpinReason::LowDensity;
  e.stack_collectible = false;
  e.oracle_collectible = false;
  episodes.push_back(e);
  const auto report = compare_detectors(episodes);
  EXPECT_TRUE(report.fully_included);
  EXPECT_TRUE(report.stack_collectible_episodes.empty());
  EXPECT_TRUE(report.common.empty());
}

TEST(CompareDetectors, RejectsRunsWithoutOracleData) {
  EpisodeRecord e = collected_episode(1, 2, 3, 4);
  e.oracle_enabled = false;
  EXPECT_THROW(compare_detectors({e}), UsageError);
}

TEST(CompareDetectors, DetectsNonInclusion) {
  EpisodeRecord stack_only = collected_episode(100, 300, 5'000, 10'000);
  stack_only.episode = 1;
  stack_only.oracle_collectible = false;
  EpisodeRecord both = collected_episode(100, 400, 350, 10'000);
  both.episode = 2;
  const auto report = compare_detectors({stack_only, both});
  EXPECT_FALSE(report.fully_included);
  EXPECT_EQ(report.common.size(), 1u);
}

// The barrier sees every access the sampler can see: running the sampler's
// detection channel (frames, walks, harvest) next to the oracle over one
// access stream leaves the stack-side activity a subset of the oracle's.
TEST(OracleSuperset, StackDetectionIsConservative) {
  Heap heap(oracle_heap_config());
  std::vector<ObjectId> ids;
  for (int i = 0; i < 30; ++i)
    ids.push_back(*heap.allocate(ObjectKind::Leaf, 64, {}, 0));
  make_tenured(heap, 0);
  AccessOracle oracle(heap);
  heap.pin_region(0, 0);
  oracle.on_pin(0, 0);

  std::vector<MutatorThread> threads(1);
  threads[0].push_frame({});
  SamplingConfig cfg;
  daemon_poll(threads, heap, 0, 0);

  std::mt19937_64 rng(8);
  for (SimTime now = 1; now <= 200; ++now) {
    // Every access is mirrored to the oracle; only some surface in frames.
    const ObjectId id = ids[rng() % ids.size()];
    oracle.record_access(heap, id, now);
    if (rng() % 2 == 0) threads[0].top_frame().place_ref(id);
    if (threads[0].walk_pending) walk_stack(threads[0], now, cfg);
    daemon_poll(threads, heap, now, 0);
  }
  const Region& r = heap.region(0);
  for (ObjectId id : ids) {
    const HeapObject* o = heap.find_object(id);
    if (o->region != 0) continue;
    if (r.activity_map.test(o->base_slot)) EXPECT_TRUE(oracle.active(0, id));
  }
}

} // namespace
} // namespace coldsim
