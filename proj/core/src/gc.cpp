#include "coldsim/gc.hpp"

#include <algorithm>
#include <unordered_set>

namespace coldsim {

const char* to_string(GcKind k) {
  return k == GcKind::Partial ? "partial" : "global";
}

void GcConfig::validate() const {
  if (!(cs_cap_fraction > 0.0 && cs_cap_fraction <= 1.0))
    throw ConfigError("gc: cs_cap_fraction must be in (0,1]");
  if (global_gc_every < 1) throw ConfigError("gc: global_gc_every must be >= 1");
  if (rs_overflow_prob < 0.0 || rs_overflow_prob > 1.0)
    throw ConfigError("gc: rs_overflow_prob must be in [0,1]");
}

bool cold_collect_ready(const Region& region, SimTime now, SimTime t_cold_ms) {
  if (region.state != RegionState::Pinned)
    throw UsageError("cold_collect_ready: region is not pinned");
  return (now - region.t_inactive) > t_cold_ms &&
         region.remembered_set == RememberedSetState::Accurate &&
         !region.critical_in_use;
}

void advance_remembered_sets(Heap& heap, double overflow_prob, std::mt19937_64& rng) {
  if (overflow_prob <= 0.0) return;
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (RegionId id : heap.regions_in_state(RegionState::Pinned)) {
    if (heap.region(id).remembered_set == RememberedSetState::Accurate &&
        dist(rng) < overflow_prob) {
      heap.set_remembered_state(id, RememberedSetState::Overflowed);
    }
  }
}

CollectionSet select_collection_set(const Heap& heap, SimTime now,
                                    const PolicyConfig& policy, const GcConfig& gc) {
  CollectionSet cs;
  cs.kind = GcKind::Partial;

  std::vector<RegionId> young;
  std::vector<RegionId> sparse;
  for (std::uint32_t id = 0; id < heap.region_count(); ++id) {
    const Region& r = heap.region(id);
    switch (r.state) {
      case RegionState::Young:
        if (r.allocated_bytes > 0) young.push_back(id);
        break;
      case RegionState::Unpinned:
        if (r.live_fraction() < policy.d_lo) sparse.push_back(id);
        break;
      default:
        break;
    }
  }
  // Oldest regions first so tenure progresses; within an age, regions with
  // the least marked mass first so garbage-heavy regions rotate through.
  // Regions passed over too many times jump the queue: a fully live region
  // still has to age.
  constexpr std::uint32_t starvation_bound = 8;
  std::sort(young.begin(), young.end(), [&](RegionId a, RegionId b) {
    const Region& ra = heap.region(a);
    const Region& rb = heap.region(b);
    const bool sa = ra.cs_skipped >= starvation_bound;
    const bool sb = rb.cs_skipped >= starvation_bound;
    if (sa != sb) return sa;
    if (ra.age != rb.age) return ra.age > rb.age;
    if (ra.tally.m_marked != rb.tally.m_marked)
      return ra.tally.m_marked < rb.tally.m_marked;
    return a < b;
  });

  const auto cap = std::max<std::size_t>(
      1, static_cast<std::size_t>(gc.cs_cap_fraction *
                                  static_cast<double>(heap.region_count())));
  for (RegionId id : young) {
    if (cs.regions.size() >= cap) break;
    cs.regions.push_back(id);
  }
  for (RegionId id : sparse) {
    if (cs.regions.size() >= cap) break;
    cs.regions.push_back(id);
  }
  for (RegionId id : heap.regions_in_state(RegionState::Pinned)) {
    if (cold_collect_ready(heap.region(id), now, policy.t_cold_ms))
      cs.regions.push_back(id);
  }
  return cs;
}

namespace {

// Tail-filling destination finder. Destinations are never in the collection
// set; empty regions are repurposed on demand.
class DestinationFinder {
public:
  DestinationFinder(Heap& heap, const std::vector<bool>& in_cs,
                    std::uint32_t tenure_age, GcStats& stats)
      : _heap(heap), _in_cs(in_cs), _tenure_age(tenure_age), _stats(stats) {}

  // Returns a region of the given age with room for `size`, or nullopt when
  // the heap has no space left.
  std::optional<RegionId> find(std::uint32_t age, std::uint64_t size) {
    auto& pool = _pools[age];
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (_heap.region_has_room(pool[i], size)) return pool[i];
    }
    // Existing same-age regions outside the collection set.
    for (std::uint32_t id = 0; id < _heap.region_count(); ++id) {
      if (_in_cs[id] || _claimed.count(id)) continue;
      const Region& r = _heap.region(id);
      const RegionState want =
          age >= _tenure_age ? RegionState::Unpinned : RegionState::Young;
      if (r.state != want || r.age != age) continue;
      if (!_heap.region_has_room(id, size)) continue;
      claim(age, id);
      return id;
    }
    // Repurpose an empty region.
    for (std::uint32_t id = 0; id < _heap.region_count(); ++id) {
      if (_in_cs[id] || _claimed.count(id)) continue;
      const Region& r = _heap.region(id);
      if (r.state != RegionState::Young || r.allocated_bytes != 0 || !r.objects.empty())
        continue;
      const RegionState st =
          age >= _tenure_age ? RegionState::Unpinned : RegionState::Young;
      _heap.repurpose_region(id, age, st);
      if (age >= _tenure_age) _stats.regions_tenured += 1;
      claim(age, id);
      return id;
    }
    return std::nullopt;
  }

private:
  void claim(std::uint32_t age, RegionId id) {
    _pools[age].push_back(id);
    _claimed.insert(id);
  }

  Heap& _heap;
  const std::vector<bool>& _in_cs;
  std::uint32_t _tenure_age;
  GcStats& _stats;
  std::unordered_map<std::uint32_t, std::vector<RegionId>> _pools;
  std::unordered_set<RegionId> _claimed;
};

} // namespace

PartialGcResult run_partial_gc(Heap& heap, const CollectionSet& cs, SimTime now,
                               const PolicyConfig& policy, GcEvents* events) {
  if (cs.kind != GcKind::Partial)
    throw UsageError("run_partial_gc: collection set is not partial");
  PartialGcResult result;
  result.stats.kind = GcKind::Partial;

  std::vector<bool> in_cs(heap.region_count(), false);
  for (RegionId id : cs.regions) {
    const RegionState s = heap.region(id).state;
    if (s == RegionState::Cold)
      throw UsageError("run_partial_gc: cold region in collection set");
    in_cs[id] = true;
    heap.region_mut(id).cs_skipped = 0;
  }
  for (std::uint32_t id = 0; id < heap.region_count(); ++id) {
    const Region& r = heap.region(id);
    if (!in_cs[id] && r.state == RegionState::Young && r.allocated_bytes > 0)
      heap.region_mut(id).cs_skipped += 1;
  }

  // Liveness inside the collection set: roots plus references from resident
  // objects outside the set, closed over references within the set. Cold
  // regions are skipped outright; nothing in them carries references.
  std::unordered_set<ObjectId> live;
  std::vector<ObjectId> work;
  auto enqueue = [&](ObjectId id) {
    if (live.insert(id).second) work.push_back(id);
  };
  for (ObjectId root : heap.roots()) {
    auto rid = heap.region_of(root);
    if (rid && in_cs[*rid]) enqueue(root);
  }
  for (std::uint32_t id = 0; id < heap.region_count(); ++id) {
    if (in_cs[id]) continue;
    const Region& r = heap.region(id);
    if (r.state == RegionState::Cold) continue;
    for (ObjectId oid : r.objects) {
      const HeapObject* o = heap.find_object(oid);
      if (!o || o->region != id || o->refs.empty()) continue;
      for (ObjectId ref : heap.refs_for_marking(oid)) {
        auto target = heap.region_of(ref);
        if (target && in_cs[*target]) enqueue(ref);
      }
    }
  }
  while (!work.empty()) {
    const ObjectId oid = work.back();
    work.pop_back();
    for (ObjectId ref : heap.refs_for_marking(oid)) {
      auto target = heap.region_of(ref);
      if (target && in_cs[*target] && !live.count(ref)) enqueue(ref);
    }
  }

  DestinationFinder dests(heap, in_cs, heap.config().tenure_age, result.stats);

  // Copy-forward from young and unpinned members, oldest sources first.
  std::vector<RegionId> sources;
  for (RegionId id : cs.regions)
    if (heap.region(id).state != RegionState::Pinned) sources.push_back(id);
  std::sort(sources.begin(), sources.end(), [&](RegionId a, RegionId b) {
    const std::uint32_t aa = heap.region(a).age, ab = heap.region(b).age;
    if (aa != ab) return aa > ab;
    return a < b;
  });

  for (RegionId sid : sources) {
    if (result.evacuation_stalled) break;
    const std::uint32_t target_age =
        std::min(heap.region(sid).age + 1, heap.config().tenure_age);
    const std::vector<ObjectId> residents = heap.region(sid).objects;
    bool complete = true;
    for (ObjectId oid : residents) {
      const HeapObject* o = heap.find_object(oid);
      if (!o || o->region != sid) continue;
      if (!live.count(oid)) {
        heap.erase_object(oid);
        continue;
      }
      const std::uint64_t size = o->size;
      auto dst = dests.find(target_age, size);
      if (!dst) {
        result.evacuation_stalled = true;
        complete = false;
        break;
      }
      heap.move_object(oid, *dst);
      result.stats.objects_copied += 1;
      result.stats.bytes_copied += size;
    }
    if (complete) {
      heap.reset_region(sid);
      result.regions_evacuated += 1;
    } else {
      heap.compact_residents(sid);
    }
  }

  // Cold collection of ready pinned members.
  for (RegionId pid : cs.regions) {
    if (heap.region(pid).state != RegionState::Pinned) continue;
    if (result.cold_area_filled) break;
    if (!cold_collect_ready(heap.region(pid), now, policy.t_cold_ms)) continue;

    const std::vector<ObjectId> candidates = heap.cold_candidates(pid);

    // First-fit plan over the cold area; abandoning cold collection for the
    // cycle when anything fails to fit.
    std::vector<std::pair<ObjectId, RegionId>> plan;
    plan.reserve(candidates.size());
    std::unordered_map<RegionId, std::pair<std::uint64_t, std::uint64_t>> avail;
    const std::vector<RegionId> cold_ids = heap.regions_in_state(RegionState::Cold);
    for (RegionId cid : cold_ids) {
      const Region& c = heap.region(cid);
      avail[cid] = {c.free_bytes(), c.slot_count() - c.bump_slot};
    }
    bool fits = true;
    for (ObjectId oid : candidates) {
      const HeapObject* o = heap.find_object(oid);
      const std::uint64_t footprint = slot_footprint_bytes(o->size);
      const std::uint64_t slots = footprint / kSlotBytes;
      bool placed = false;
      for (RegionId cid : cold_ids) {
        auto& [bytes_free, slots_free] = avail[cid];
        if (bytes_free >= footprint && slots_free >= slots) {
          bytes_free -= footprint;
          slots_free -= slots;
          plan.emplace_back(oid, cid);
          placed = true;
          break;
        }
      }
      if (!placed) {
        fits = false;
        break;
      }
    }
    if (!fits) {
      result.cold_area_filled = true;
      auto unpins = on_global_gc_or_cold_full(heap, UnpinReason::ColdAreaFull);
      result.unpin_decisions.insert(result.unpin_decisions.end(), unpins.begin(),
                                    unpins.end());
      break;
    }

    if (events) events->before_cold_collection(heap, pid, now);

    const double metric =
        pinning_metric(heap.region(pid).mma_r, heap.region(pid).census.d);
    std::uint64_t moved_bytes = 0;
    std::vector<ObjectId> moved;
    moved.reserve(plan.size());
    for (const auto& [oid, cid] : plan) {
      const std::uint64_t size = heap.find_object(oid)->size;
      if (!heap.move_object(oid, cid))
        throw UsageError("run_partial_gc: planned cold placement failed");
      moved_bytes += size;
      moved.push_back(oid);
    }
    // The harvest is irreversible, so it is reported even if the region's
    // survivor evacuation stalls below.
    result.stats.cold_objects_moved += moved.size();
    result.stats.cold_bytes_moved += moved_bytes;
    if (events && !moved.empty())
      events->on_cold_collection(pid, moved, moved_bytes, now);

    // Everything else marked moves to unpinned regions.
    const std::vector<ObjectId> residents = heap.region(pid).objects;
    bool complete = true;
    for (ObjectId oid : residents) {
      const HeapObject* o = heap.find_object(oid);
      if (!o || o->region != pid) continue;
      if (!heap.is_marked(oid)) {
        heap.erase_object(oid);
        continue;
      }
      const std::uint64_t size = o->size;
      auto dst = dests.find(heap.config().tenure_age, size);
      if (!dst) {
        result.evacuation_stalled = true;
        complete = false;
        break;
      }
      heap.move_object(oid, *dst);
      result.stats.objects_copied += 1;
      result.stats.bytes_copied += size;
    }
    if (!complete) {
      // Out of evacuation space: the region stays pinned with what is left
      // and will be retried on a later cycle.
      heap.compact_residents(pid);
      continue;
    }

    heap.unpin_region(pid);
    heap.reset_region(pid);
    result.regions_evacuated += 1;
    result.unpin_decisions.push_back(
        {pid, metric, PinAction::Unpin, UnpinReason::WentCold});
    result.stats.cold_collected_regions += 1;
  }

  return result;
}

GlobalGcResult run_global_gc(Heap& heap, SimTime now, GcEvents* events) {
  (void)events;
  GlobalGcResult result;
  result.stats.kind = GcKind::Global;

  result.unpin_decisions = on_global_gc_or_cold_full(heap, UnpinReason::GlobalGc);

  heap.clear_marks_for_global_gc();

  std::unordered_set<ObjectId> reached;
  std::vector<ObjectId> work(heap.roots().begin(), heap.roots().end());
  while (!work.empty()) {
    const ObjectId oid = work.back();
    work.pop_back();
    if (!reached.insert(oid).second) continue;
    const HeapObject* o = heap.find_object(oid);
    if (!o) continue;
    heap.mark_object(oid);
    if (heap.region(o->region).state == RegionState::Cold) continue; // never traversed
    if (o->refs.empty()) continue;
    for (ObjectId ref : heap.refs_for_marking(oid)) {
      if (heap.object_exists(ref) && !reached.count(ref)) work.push_back(ref);
    }
  }

  for (std::uint32_t id = 0; id < heap.region_count(); ++id) {
    const bool cold = heap.region(id).state == RegionState::Cold;
    const std::vector<ObjectId> residents = heap.region(id).objects;
    for (ObjectId oid : residents) {
      const HeapObject* o = heap.find_object(oid);
      if (!o || o->region != id) continue;
      if (reached.count(oid)) continue;
      if (cold) {
        result.cold_objects_reclaimed += 1;
        result.cold_bytes_reclaimed += o->size;
      }
      heap.erase_object(oid);
    }
    heap.compact_residents(id);
  }
  return result;
}

} // namespace coldsim
