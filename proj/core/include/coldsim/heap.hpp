#ifndef COLDSIM_HEAP_HPP
#define COLDSIM_HEAP_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "coldsim/types.hpp"

namespace coldsim {

enum class ObjectKind : std::uint8_t {
  PrimitiveArray,
  Leaf,
  Internal,
  // Objects whose fields are all primitive-valued. Only eligible for cold
  // collection when HeapConfig::widen_primitive_fields_only is set.
  PrimitiveFieldsOnly,
};

const char* to_string(ObjectKind kind);

enum class RegionState : std::uint8_t { Young, Unpinned, Pinned, Cold };

const char* to_string(RegionState state);

enum class RememberedSetState : std::uint8_t { Accurate, Overflowed };

struct HeapObject {
  ObjectId id = kNoObject;
  ObjectKind kind = ObjectKind::Leaf;
  std::uint64_t size = 0; // bytes
  std::vector<ObjectId> refs; // non-empty only for Internal
  SimTime birth_time = 0;

  // Residence, maintained by the heap.
  RegionId region = 0;
  std::uint32_t base_slot = 0;
};

struct RegionCensus {
  std::uint64_t n_marked = 0;
  std::uint64_t n_collectible = 0;
  std::uint64_t m_marked = 0;      // bytes
  std::uint64_t m_collectible = 0; // bytes
  double d = 0.0;                  // allocated_bytes / size_R
};

// Continuously maintained marked-object counters. The policy-visible census
// is a snapshot of these taken when a region is walked.
struct RegionTally {
  std::uint64_t n_marked = 0;
  std::uint64_t n_collectible = 0;
  std::uint64_t m_marked = 0;
  std::uint64_t m_collectible = 0;
};

// Fixed-width slot bitmap. One bit per 16-byte slot in a region.
class Bitmap {
public:
  Bitmap() = default;
  explicit Bitmap(std::uint32_t bits) : _bits(bits), _words((bits + 63) / 64, 0) {}

  bool empty() const { return _bits == 0; }
  std::uint32_t bit_capacity() const { return _bits; }

  bool test(std::uint32_t i) const {
    return (_words[i >> 6] >> (i & 63)) & 1u;
  }
  // Returns true on a 0 -> 1 transition.
  bool set(std::uint32_t i) {
    std::uint64_t& w = _words[i >> 6];
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (w & mask) return false;
    w |= mask;
    return true;
  }
  void clear(std::uint32_t i) { _words[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  void reset() { std::fill(_words.begin(), _words.end(), 0); }
  std::uint64_t popcount() const;
  // True when every set bit of this map is also set in `other`.
  bool subset_of(const Bitmap& other) const;

private:
  std::uint32_t _bits = 0;
  std::vector<std::uint64_t> _words;
};

struct Region {
  RegionId id = 0;
  std::uint64_t size_bytes = 0;
  std::uint32_t age = 0;
  RegionState state = RegionState::Young;
  Bitmap mark_map;
  Bitmap activity_map; // present (non-empty) only while Pinned or Cold
  std::uint64_t allocated_bytes = 0;
  std::uint32_t bump_slot = 0;

  // Reference-activity statistics consumed by the pinning policy.
  std::uint64_t r = 0;      // sampled references since the last partial GC
  double mma_r = 0.0;       // modified moving average of r
  std::uint64_t sum_r = 0;  // cumulative r over the region's lifetime

  SimTime t_pinned = 0;
  SimTime t_inactive = 0;
  SimTime t_walked = 0;
  RegionCensus census;
  RegionTally tally;
  RememberedSetState remembered_set = RememberedSetState::Accurate;
  bool critical_in_use = false;
  // Partial cycles this young region has been passed over; fully live
  // regions must still rotate through collection sets to age.
  std::uint32_t cs_skipped = 0;

  // Resident objects in address (placement) order.
  std::vector<ObjectId> objects;

  std::uint32_t slot_count() const {
    return static_cast<std::uint32_t>(size_bytes / kSlotBytes);
  }
  std::uint64_t free_bytes() const { return size_bytes - allocated_bytes; }
  bool is_tenured() const { return state == RegionState::Unpinned || state == RegionState::Pinned; }
  double live_fraction() const {
    return static_cast<double>(tally.m_marked) / static_cast<double>(size_bytes);
  }
};

struct HeapConfig {
  std::uint64_t region_size_bytes = 512 * 1024;
  std::uint32_t region_count = 256;
  std::uint32_t cold_region_count = 8;
  std::uint32_t tenure_age = 24;
  bool widen_primitive_fields_only = false;

  void validate() const; // throws ConfigError
  std::uint64_t mutator_capacity_bytes() const {
    return std::uint64_t(region_count - cold_region_count) * region_size_bytes;
  }
  // Empty regions the allocator leaves untouched so copy-forward always has
  // evacuation destinations.
  std::uint32_t evacuation_reserve() const {
    const std::uint32_t mutator = region_count - cold_region_count;
    return std::max<std::uint32_t>(2, mutator / 12);
  }
};

std::uint64_t slot_footprint_bytes(std::uint64_t size);

// Region-partitioned heap: object store, per-region bitmaps and statistics,
// and the root registry the collector marks from. All mutation goes through
// methods so the mark/activity maps and residence lists stay coherent.
class Heap {
public:
  explicit Heap(const HeapConfig& config);

  const HeapConfig& config() const { return _config; }
  std::uint32_t region_count() const { return static_cast<std::uint32_t>(_regions.size()); }
  const Region& region(RegionId id) const;
  Region& region_mut(RegionId id);

  // Bump-allocates into the lowest-indexed age-0 region with room. Returns
  // nullopt when no age-0 region can take the object: the caller is expected
  // to run a GC cycle and retry.
  std::optional<ObjectId> allocate(ObjectKind kind, std::uint64_t size,
                                   std::vector<ObjectId> refs, SimTime now);

  // Root registry. allocate() roots the new object; kill() unroots it.
  void kill(ObjectId id);
  bool is_root(ObjectId id) const;
  const std::vector<ObjectId>& roots() const { return _roots; }

  const HeapObject* find_object(ObjectId id) const;
  bool object_exists(ObjectId id) const { return _objects.count(id) != 0; }
  std::optional<RegionId> region_of(ObjectId id) const;
  bool is_marked(ObjectId id) const;
  std::uint64_t live_object_count() const { return _objects.size(); }

  bool collectible_kind(ObjectKind kind) const;

  double region_density(RegionId id) const;
  std::uint64_t collectible_mass(RegionId id) const;

  // Recomputes the census of a pinned or cold region and stamps t_walked.
  const RegionCensus& walk_region(RegionId id, SimTime now);
  // Census recomputation without the state restriction or timestamp; used
  // for unpinned regions at selection time.
  const RegionCensus& refresh_census(RegionId id);
  // Full rescan of a region's residents, independent of the running tally.
  RegionCensus recount_census(RegionId id) const;

  // Sets the activity bit for a marked object in a pinned or cold region.
  // Returns true on the 0 -> 1 transition and then stamps t_inactive = now.
  bool set_activity(RegionId rid, ObjectId oid, SimTime now);

  // Marked, inactive, collectible objects of a pinned region, address order.
  std::vector<ObjectId> cold_candidates(RegionId id) const;

  // -- region lifecycle (used by the GC engine and pinning policy) --

  void pin_region(RegionId id, SimTime now);
  void unpin_region(RegionId id);
  // Copies one live object into `dst` (bump placement, mark bit set).
  // Returns false when dst lacks room; the heap is unchanged in that case.
  bool move_object(ObjectId oid, RegionId dst);
  bool region_has_room(RegionId id, std::uint64_t size) const;
  // Drops an object record entirely (clears bits, erases the store entry).
  // The residence list is rebuilt by reset_region()/sweep helpers.
  void erase_object(ObjectId id);
  // Empties a region back to Young / age 0 with fresh statistics.
  void reset_region(RegionId id);
  // Assigns age/state to an empty region about to receive survivors.
  void repurpose_region(RegionId id, std::uint32_t age, RegionState state);
  // Rebuilds a region's residence list, keeping only objects that still
  // exist in the store; recomputes bookkeeping for cold regions so reclaimed
  // bytes can be reused.
  void compact_residents(RegionId id);

  void set_remembered_state(RegionId id, RememberedSetState s);
  void set_critical(RegionId id, bool in_use);

  void count_reference(RegionId id) { _regions[id].r += 1; }
  void reset_cycle_refcounts();

  // Reference fields of an object, as read by the marker. Reads against
  // cold-resident objects are counted by the probe; the collector must
  // never cause that counter to move.
  const std::vector<ObjectId>& refs_for_marking(ObjectId id);
  std::uint64_t cold_ref_reads() const { return _cold_ref_reads; }

  // Distinct cold-area objects that have received a sampled reference.
  std::uint64_t cold_activity_transitions() const { return _cold_activity_transitions; }

  std::array<std::uint32_t, 4> region_counts_by_state() const;
  std::vector<RegionId> regions_in_state(RegionState s) const;
  std::uint64_t cold_free_bytes() const;

  // Full-scan checks: activity subset-of mark everywhere, cold-area objects
  // collectible, residence lists coherent. Throws UsageError on violation.
  void check_invariants() const;

  // Set/clear mark bits directly; global GC owns full-mark recomputation.
  void clear_marks_for_global_gc();
  void mark_object(ObjectId id);

private:
  Region& region_checked(RegionId id, const char* op);
  void recompute_census(Region& r);
  void place(HeapObject&& obj, Region& dst);

  HeapConfig _config;
  std::vector<Region> _regions;
  std::unordered_map<ObjectId, HeapObject> _objects;
  std::vector<ObjectId> _roots;
  std::unordered_map<ObjectId, std::size_t> _root_index;
  std::set<RegionId> _allocatable; // age-0 Young regions with free space
  std::uint32_t _empty_mutator_regions = 0;
  ObjectId _next_id = 1;
  std::uint64_t _cold_ref_reads = 0;
  std::uint64_t _cold_activity_transitions = 0;
  static const std::vector<ObjectId> _no_refs;
};

} // namespace coldsim

#endif // COLDSIM_HEAP_HPP
