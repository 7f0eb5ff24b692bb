#ifndef COLDSIM_GC_HPP
#define COLDSIM_GC_HPP

#include <random>
#include <vector>

#include "coldsim/heap.hpp"
#include "coldsim/pinning.hpp"

namespace coldsim {

enum class GcKind : std::uint8_t { Partial, Global };

const char* to_string(GcKind k);

struct CollectionSet {
  std::vector<RegionId> regions;
  GcKind kind = GcKind::Partial;
};

struct GcStats {
  std::uint64_t cycle_index = 0;
  GcKind kind = GcKind::Partial;
  std::uint64_t objects_copied = 0;
  std::uint64_t bytes_copied = 0;
  std::uint32_t regions_tenured = 0;
  std::uint32_t cold_collected_regions = 0;
  std::uint64_t cold_objects_moved = 0;
  std::uint64_t cold_bytes_moved = 0;
};

struct GcConfig {
  // Partial collection sets take all young regions plus low-liveness
  // unpinned regions, capped at this fraction of the heap.
  double cs_cap_fraction = 0.25;
  std::uint32_t global_gc_every = 32;
  // Per-cycle chance that a pinned region's remembered set overflows.
  double rs_overflow_prob = 0.0;

  void validate() const;
};

// Scenario-side observer for moments the collector would otherwise destroy:
// a ready pinned region's maps are only inspectable before its contents move.
class GcEvents {
public:
  virtual ~GcEvents() = default;
  virtual void before_cold_collection(const Heap&, RegionId, SimTime) {}
  virtual void on_cold_collection(RegionId, const std::vector<ObjectId>& moved,
                                  std::uint64_t bytes, SimTime) {}
};

struct PartialGcResult {
  GcStats stats;
  std::vector<PinDecision> unpin_decisions;
  bool cold_area_filled = false;
  bool evacuation_stalled = false;
  std::uint32_t regions_evacuated = 0; // sources emptied and reset this cycle
};

struct GlobalGcResult {
  GcStats stats;
  std::vector<PinDecision> unpin_decisions;
  std::uint64_t cold_objects_reclaimed = 0;
  std::uint64_t cold_bytes_reclaimed = 0;
};

// A pinned region may be cold collected once it has been quiescent for more
// than T_cold, has an accurate remembered set, and is not held critical.
bool cold_collect_ready(const Region& region, SimTime now, SimTime t_cold_ms);

// Flips pinned regions' remembered sets into the overflowed state with the
// configured per-cycle probability. Called once per partial cycle before
// collection-set selection.
void advance_remembered_sets(Heap& heap, double overflow_prob, std::mt19937_64& rng);

// Partial collection set: non-empty young regions (oldest first) and
// low-liveness unpinned regions up to the cap, plus every ready pinned
// region. Cold regions and non-ready pinned regions are never included.
CollectionSet select_collection_set(const Heap& heap, SimTime now,
                                    const PolicyConfig& policy, const GcConfig& gc);

// Copy-forward over the collection set. Live objects move to regions one age
// older (capped at tenure age; age-24 destinations are unpinned). Ready
// pinned regions have their cold candidates copied to the cold area in
// address order and all other live objects copied to unpinned regions, then
// are emptied. If the cold area cannot take a candidate, cold collection is
// abandoned for the cycle and every pinned region is unpinned.
PartialGcResult run_partial_gc(Heap& heap, const CollectionSet& cs, SimTime now,
                               const PolicyConfig& policy, GcEvents* events = nullptr);

// Full mark over the object graph. All pinned regions are unpinned first.
// Cold-region objects are marked via their incoming references only; the
// marker never reads reference fields of cold residents. Unreached objects
// are swept, and dead cold objects' bytes are reclaimed.
GlobalGcResult run_global_gc(Heap& heap, SimTime now, GcEvents* events = nullptr);

} // namespace coldsim

#endif // COLDSIM_GC_HPP
