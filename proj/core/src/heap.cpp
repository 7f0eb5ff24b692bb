#include "coldsim/heap.hpp"

#include <algorithm>
#include <bit>

namespace coldsim {

const std::vector<ObjectId> Heap::_no_refs{};

const char* to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::PrimitiveArray: return "primitive_array";
    case ObjectKind::Leaf: return "leaf";
    case ObjectKind::Internal: return "internal";
    case ObjectKind::PrimitiveFieldsOnly: return "primitive_fields";
  }
  return "?";
}

const char* to_string(RegionState state) {
  switch (state) {
    case RegionState::Young: return "young";
    case RegionState::Unpinned: return "unpinned";
    case RegionState::Pinned: return "pinned";
    case RegionState::Cold: return "cold";
  }
  return "?";
}

std::uint64_t Bitmap::popcount() const {
  std::uint64_t n = 0;
  for (std::uint64_t w : _words) n += std::popcount(w);
  return n;
}

bool Bitmap::subset_of(const Bitmap& other) const {
  if (_bits == 0) return true;
  if (other._bits < _bits) return false;
  for (std::size_t i = 0; i < _words.size(); ++i) {
    if (_words[i] & ~other._words[i]) return false;
  }
  return true;
}

std::uint64_t slot_footprint_bytes(std::uint64_t size) {
  return (size + kSlotBytes - 1) / kSlotBytes * kSlotBytes;
}

void HeapConfig::validate() const {
  if (region_count == 0) throw ConfigError("heap: region_count must be positive");
  if (cold_region_count < 1) throw ConfigError("heap: cold_region_count must be >= 1");
  if (region_count <= cold_region_count)
    throw ConfigError("heap: region_count must exceed cold_region_count");
  if (region_size_bytes == 0 || region_size_bytes % kSlotBytes != 0)
    throw ConfigError("heap: region_size_bytes must be a positive multiple of 16");
  if (tenure_age == 0) throw ConfigError("heap: tenure_age must be positive");
}

Heap::Heap(const HeapConfig& config) : _config(config) {
  config.validate();
  _regions.resize(config.region_count);
  const std::uint32_t first_cold = config.region_count - config.cold_region_count;
  for (std::uint32_t i = 0; i < config.region_count; ++i) {
    Region& r = _regions[i];
    r.id = i;
    r.size_bytes = config.region_size_bytes;
    r.mark_map = Bitmap(r.slot_count());
    if (i >= first_cold) {
      r.state = RegionState::Cold;
      r.age = config.tenure_age;
      r.activity_map = Bitmap(r.slot_count());
    } else {
      r.state = RegionState::Young;
      r.age = 0;
      _allocatable.insert(i);
    }
  }
  _empty_mutator_regions = first_cold;
}

const Region& Heap::region(RegionId id) const {
  if (id >= _regions.size()) throw UsageError("heap: region id out of range");
  return _regions[id];
}

Region& Heap::region_mut(RegionId id) {
  if (id >= _regions.size()) throw UsageError("heap: region id out of range");
  return _regions[id];
}

Region& Heap::region_checked(RegionId id, const char* op) {
  if (id >= _regions.size())
    throw UsageError(std::string(op) + ": region id out of range");
  return _regions[id];
}

void Heap::place(HeapObject&& obj, Region& dst) {
  const std::uint64_t footprint = slot_footprint_bytes(obj.size);
  if (dst.allocated_bytes == 0 && dst.state != RegionState::Cold)
    _empty_mutator_regions -= 1;
  obj.region = dst.id;
  obj.base_slot = dst.bump_slot;
  dst.bump_slot += static_cast<std::uint32_t>(footprint / kSlotBytes);
  dst.allocated_bytes += footprint;
  dst.mark_map.set(obj.base_slot);
  dst.objects.push_back(obj.id);
  dst.tally.n_marked += 1;
  dst.tally.m_marked += obj.size;
  if (collectible_kind(obj.kind)) {
    dst.tally.n_collectible += 1;
    dst.tally.m_collectible += obj.size;
  }
  _objects.emplace(obj.id, std::move(obj));
}

std::optional<ObjectId> Heap::allocate(ObjectKind kind, std::uint64_t size,
                                       std::vector<ObjectId> refs, SimTime now) {
  if (size == 0 || size > _config.region_size_bytes)
    throw UsageError("allocate: object size must be in (0, region_size]");
  if (kind != ObjectKind::Internal && !refs.empty())
    throw UsageError("allocate: only internal objects carry references");

  const std::uint64_t footprint = slot_footprint_bytes(size);
  for (auto it = _allocatable.begin(); it != _allocatable.end(); ++it) {
    Region& r = _regions[*it];
    if (r.free_bytes() < footprint) continue;
    // Breaking into a fresh region is refused while the evacuation reserve
    // is at its floor; the caller must collect first.
    if (r.allocated_bytes == 0 && _empty_mutator_regions <= _config.evacuation_reserve())
      continue;
    HeapObject obj;
    obj.id = _next_id++;
    obj.kind = kind;
    obj.size = size;
    obj.refs = std::move(refs);
    obj.birth_time = now;
    const ObjectId id = obj.id;
    place(std::move(obj), r);
    if (r.free_bytes() < kSlotBytes) _allocatable.erase(it);
    _root_index.emplace(id, _roots.size());
    _roots.push_back(id);
    return id;
  }
  return std::nullopt; // GC required
}

void Heap::kill(ObjectId id) {
  auto it = _root_index.find(id);
  if (it == _root_index.end())
    throw UsageError("kill: object is not a live root");
  const std::size_t idx = it->second;
  const ObjectId last = _roots.back();
  _roots[idx] = last;
  _root_index[last] = idx;
  _roots.pop_back();
  _root_index.erase(it);
}

bool Heap::is_root(ObjectId id) const { return _root_index.count(id) != 0; }

const HeapObject* Heap::find_object(ObjectId id) const {
  auto it = _objects.find(id);
  return it == _objects.end() ? nullptr : &it->second;
}

std::optional<RegionId> Heap::region_of(ObjectId id) const {
  auto it = _objects.find(id);
  if (it == _objects.end()) return std::nullopt;
  return it->second.region;
}

bool Heap::is_marked(ObjectId id) const {
  auto it = _objects.find(id);
  if (it == _objects.end()) return false;
  const HeapObject& o = it->second;
  return _regions[o.region].mark_map.test(o.base_slot);
}

bool Heap::collectible_kind(ObjectKind kind) const {
  if (kind == ObjectKind::PrimitiveArray || kind == ObjectKind::Leaf) return true;
  return kind == ObjectKind::PrimitiveFieldsOnly && _config.widen_primitive_fields_only;
}

double Heap::region_density(RegionId id) const {
  const Region& r = region(id);
  return static_cast<double>(r.allocated_bytes) / static_cast<double>(r.size_bytes);
}

std::uint64_t Heap::collectible_mass(RegionId id) const {
  return region(id).tally.m_collectible;
}

void Heap::recompute_census(Region& r) {
  r.census.n_marked = r.tally.n_marked;
  r.census.n_collectible = r.tally.n_collectible;
  r.census.m_marked = r.tally.m_marked;
  r.census.m_collectible = r.tally.m_collectible;
  r.census.d = static_cast<double>(r.allocated_bytes) / static_cast<double>(r.size_bytes);
}

RegionCensus Heap::recount_census(RegionId id) const {
  const Region& r = region(id);
  RegionCensus c;
  for (ObjectId oid : r.objects) {
    auto it = _objects.find(oid);
    if (it == _objects.end() || it->second.region != id) continue;
    const HeapObject& o = it->second;
    if (!r.mark_map.test(o.base_slot)) continue;
    c.n_marked += 1;
    c.m_marked += o.size;
    if (collectible_kind(o.kind)) {
      c.n_collectible += 1;
      c.m_collectible += o.size;
    }
  }
  c.d = static_cast<double>(r.allocated_bytes) / static_cast<double>(r.size_bytes);
  return c;
}

const RegionCensus& Heap::walk_region(RegionId id, SimTime now) {
  Region& r = region_checked(id, "walk_region");
  if (r.state != RegionState::Pinned && r.state != RegionState::Cold)
    throw UsageError("walk_region: region is neither pinned nor cold");
  recompute_census(r);
  r.t_walked = now;
  return r.census;
}

const RegionCensus& Heap::refresh_census(RegionId id) {
  Region& r = region_checked(id, "refresh_census");
  recompute_census(r);
  return r.census;
}

bool Heap::set_activity(RegionId rid, ObjectId oid, SimTime now) {
  Region& r = region_checked(rid, "set_activity");
  if (r.state != RegionState::Pinned && r.state != RegionState::Cold)
    throw UsageError("set_activity: region is neither pinned nor cold");
  auto it = _objects.find(oid);
  if (it == _objects.end() || it->second.region != rid)
    throw UsageError("set_activity: object is not resident in region");
  const HeapObject& o = it->second;
  if (!r.mark_map.test(o.base_slot))
    throw UsageError("set_activity: object is not marked");
  if (r.activity_map.set(o.base_slot)) {
    r.t_inactive = now;
    if (r.state == RegionState::Cold) _cold_activity_transitions += 1;
    return true;
  }
  return false;
}

std::vector<ObjectId> Heap::cold_candidates(RegionId id) const {
  const Region& r = region(id);
  if (r.state != RegionState::Pinned)
    throw UsageError("cold_candidates: region is not pinned");
  std::vector<ObjectId> out;
  for (ObjectId oid : r.objects) {
    auto it = _objects.find(oid);
    if (it == _objects.end() || it->second.region != id) continue;
    const HeapObject& o = it->second;
    if (!r.mark_map.test(o.base_slot)) continue;
    if (r.activity_map.test(o.base_slot)) continue;
    if (!collectible_kind(o.kind)) continue;
    out.push_back(oid);
  }
  return out;
}

void Heap::pin_region(RegionId id, SimTime now) {
  Region& r = region_checked(id, "pin_region");
  if (r.state != RegionState::Unpinned)
    throw UsageError("pin_region: only unpinned regions can be pinned");
  r.state = RegionState::Pinned;
  r.activity_map = Bitmap(r.slot_count());
  r.t_pinned = r.t_inactive = r.t_walked = now;
  recompute_census(r);
}

void Heap::unpin_region(RegionId id) {
  Region& r = region_checked(id, "unpin_region");
  if (r.state != RegionState::Pinned)
    throw UsageError("unpin_region: region is not pinned");
  r.state = RegionState::Unpinned;
  r.activity_map = Bitmap();
  r.remembered_set = RememberedSetState::Accurate;
}

bool Heap::region_has_room(RegionId id, std::uint64_t size) const {
  const Region& r = region(id);
  const std::uint64_t footprint = slot_footprint_bytes(size);
  return r.free_bytes() >= footprint &&
         r.bump_slot + footprint / kSlotBytes <= r.slot_count();
}

bool Heap::move_object(ObjectId oid, RegionId dst_id) {
  auto it = _objects.find(oid);
  if (it == _objects.end()) throw UsageError("move_object: no such object");
  HeapObject& o = it->second;
  if (!region_has_room(dst_id, o.size)) return false;
  Region& src = _regions[o.region];
  Region& dst = _regions[dst_id];
  const std::uint64_t footprint = slot_footprint_bytes(o.size);
  const bool collectible = collectible_kind(o.kind);
  if (dst.allocated_bytes == 0 && dst.state != RegionState::Cold)
    _empty_mutator_regions -= 1;
  if (src.mark_map.test(o.base_slot)) {
    src.mark_map.clear(o.base_slot);
    src.tally.n_marked -= 1;
    src.tally.m_marked -= o.size;
    if (collectible) {
      src.tally.n_collectible -= 1;
      src.tally.m_collectible -= o.size;
    }
  }
  if (!src.activity_map.empty()) src.activity_map.clear(o.base_slot);
  o.region = dst_id;
  o.base_slot = dst.bump_slot;
  dst.bump_slot += static_cast<std::uint32_t>(footprint / kSlotBytes);
  dst.allocated_bytes += footprint;
  dst.mark_map.set(o.base_slot);
  dst.objects.push_back(oid);
  dst.tally.n_marked += 1;
  dst.tally.m_marked += o.size;
  if (collectible) {
    dst.tally.n_collectible += 1;
    dst.tally.m_collectible += o.size;
  }
  if (dst.state == RegionState::Young && dst.age == 0 && dst.free_bytes() < kSlotBytes)
    _allocatable.erase(dst_id);
  return true;
}

void Heap::erase_object(ObjectId id) {
  auto it = _objects.find(id);
  if (it == _objects.end()) throw UsageError("erase_object: no such object");
  if (is_root(id)) throw UsageError("erase_object: object is still rooted");
  HeapObject& o = it->second;
  Region& r = _regions[o.region];
  if (r.mark_map.test(o.base_slot)) {
    r.mark_map.clear(o.base_slot);
    r.tally.n_marked -= 1;
    r.tally.m_marked -= o.size;
    if (collectible_kind(o.kind)) {
      r.tally.n_collectible -= 1;
      r.tally.m_collectible -= o.size;
    }
  }
  if (!r.activity_map.empty()) r.activity_map.clear(o.base_slot);
  _objects.erase(it);
}

void Heap::reset_region(RegionId id) {
  Region& r = region_checked(id, "reset_region");
  if (r.state == RegionState::Cold)
    throw UsageError("reset_region: cold regions are never recycled");
  for (ObjectId oid : r.objects) {
    auto it = _objects.find(oid);
    if (it != _objects.end() && it->second.region == id) {
      if (is_root(oid)) throw UsageError("reset_region: evacuating a rooted object");
      _objects.erase(it);
    }
  }
  r.objects.clear();
  r.mark_map.reset();
  r.activity_map = Bitmap();
  r.state = RegionState::Young;
  r.age = 0;
  if (r.allocated_bytes > 0) _empty_mutator_regions += 1;
  r.allocated_bytes = 0;
  r.bump_slot = 0;
  r.r = 0;
  r.mma_r = 0.0;
  r.sum_r = 0;
  r.t_pinned = r.t_inactive = r.t_walked = 0;
  r.census = RegionCensus{};
  r.tally = RegionTally{};
  r.remembered_set = RememberedSetState::Accurate;
  r.critical_in_use = false;
  r.cs_skipped = 0;
  _allocatable.insert(id);
}

void Heap::repurpose_region(RegionId id, std::uint32_t age, RegionState state) {
  Region& r = region_checked(id, "repurpose_region");
  if (r.allocated_bytes != 0 || !r.objects.empty())
    throw UsageError("repurpose_region: region is not empty");
  if (state != RegionState::Young && state != RegionState::Unpinned)
    throw UsageError("repurpose_region: destination must be young or unpinned");
  r.age = age;
  r.state = state;
  if (!(state == RegionState::Young && age == 0)) _allocatable.erase(id);
}

void Heap::compact_residents(RegionId id) {
  Region& r = region_checked(id, "compact_residents");
  std::vector<ObjectId> kept;
  kept.reserve(r.objects.size());
  std::uint64_t bytes = 0;
  for (ObjectId oid : r.objects) {
    auto it = _objects.find(oid);
    if (it == _objects.end() || it->second.region != id) continue;
    kept.push_back(oid);
    bytes += slot_footprint_bytes(it->second.size);
  }
  r.objects = std::move(kept);
  if (r.state == RegionState::Cold) {
    // Reclaimed cold bytes become available for future cold placements.
    r.allocated_bytes = bytes;
    if (r.objects.empty()) r.bump_slot = 0;
  }
}

void Heap::set_remembered_state(RegionId id, RememberedSetState s) {
  region_checked(id, "set_remembered_state").remembered_set = s;
}

void Heap::set_critical(RegionId id, bool in_use) {
  region_checked(id, "set_critical").critical_in_use = in_use;
}

void Heap::reset_cycle_refcounts() {
  for (Region& r : _regions) r.r = 0;
}

const std::vector<ObjectId>& Heap::refs_for_marking(ObjectId id) {
  auto it = _objects.find(id);
  if (it == _objects.end()) throw UsageError("refs_for_marking: no such object");
  if (_regions[it->second.region].state == RegionState::Cold) _cold_ref_reads += 1;
  return it->second.refs;
}

std::array<std::uint32_t, 4> Heap::region_counts_by_state() const {
  std::array<std::uint32_t, 4> counts{};
  for (const Region& r : _regions) counts[static_cast<std::size_t>(r.state)] += 1;
  return counts;
}

std::vector<RegionId> Heap::regions_in_state(RegionState s) const {
  std::vector<RegionId> out;
  for (const Region& r : _regions)
    if (r.state == s) out.push_back(r.id);
  return out;
}

std::uint64_t Heap::cold_free_bytes() const {
  std::uint64_t total = 0;
  for (const Region& r : _regions)
    if (r.state == RegionState::Cold) total += r.free_bytes();
  return total;
}

void Heap::clear_marks_for_global_gc() {
  for (Region& r : _regions) {
    if (r.state == RegionState::Cold) continue;
    r.mark_map.reset();
    r.tally = RegionTally{};
  }
}

void Heap::mark_object(ObjectId id) {
  auto it = _objects.find(id);
  if (it == _objects.end()) throw UsageError("mark_object: no such object");
  const HeapObject& o = it->second;
  Region& r = _regions[o.region];
  if (r.mark_map.set(o.base_slot)) {
    r.tally.n_marked += 1;
    r.tally.m_marked += o.size;
    if (collectible_kind(o.kind)) {
      r.tally.n_collectible += 1;
      r.tally.m_collectible += o.size;
    }
  }
}

void Heap::check_invariants() const {
  for (const Region& r : _regions) {
    const bool instrumented = r.state == RegionState::Pinned || r.state == RegionState::Cold;
    if (instrumented != !r.activity_map.empty())
      throw UsageError("invariant: activity map presence must match pinned/cold state");
    if (!r.activity_map.subset_of(r.mark_map))
      throw UsageError("invariant: activity map must be a subset of the mark map");
    if (r.allocated_bytes > r.size_bytes)
      throw UsageError("invariant: allocated bytes exceed region size");
    if ((r.state == RegionState::Young) != (r.age < _config.tenure_age))
      throw UsageError("invariant: young state must match age < tenure age");
    for (ObjectId oid : r.objects) {
      auto it = _objects.find(oid);
      if (it == _objects.end() || it->second.region != r.id) continue;
      const HeapObject& o = it->second;
      if (o.base_slot >= r.slot_count())
        throw UsageError("invariant: object slot out of region bounds");
      if (r.state == RegionState::Cold && !collectible_kind(o.kind))
        throw UsageError("invariant: non-collectible object in cold area");
      if (o.kind != ObjectKind::Internal && !o.refs.empty())
        throw UsageError("invariant: non-internal object with references");
    }
    if (r.census.d < 0.0 || r.census.d > 1.0)
      throw UsageError("invariant: census density outside [0,1]");
  }
  for (ObjectId oid : _roots) {
    if (!_objects.count(oid)) throw UsageError("invariant: dangling root");
  }
}

} // namespace coldsim
