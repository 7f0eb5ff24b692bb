#include "coldsim/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "coldsim/gc.hpp"
#include "coldsim/oracle.hpp"

namespace coldsim {

namespace {

// Pinned-episode bookkeeping plus the snapshot taken just before a ready
// region's contents move to the cold area.
struct EpisodeState {
  std::uint64_t id = 0;
  SimTime t_pinned = 0;
};

struct ColdCapture {
  SimTime t_end = 0;
  SimTime stack_last = 0;
  SimTime oracle_last = 0;
  std::uint64_t inactive = 0;
  std::uint64_t false_inactive = 0;
  bool overflowed = false;
};

class ScenarioRun : public GcEvents {
public:
  explicit ScenarioRun(const ScenarioConfig& config)
      : _cfg(config),
        _heap(config.heap),
        _gc_rng(config.workload.seed ^ 0x9e3779b97f4a7c15ull) {
    if (!_cfg.replay_trace_path.empty()) {
      _workload = replay_trace_file(_cfg.replay_trace_path);
    } else {
      _workload = build_workload(_cfg.workload, _cfg.heap);
    }
    if (_cfg.oracle_enabled) _oracle.emplace(_heap);
    _threads.resize(_workload->thread_count());
    for (std::uint32_t i = 0; i < _threads.size(); ++i) _threads[i].id = i;
    const GroundTruth& gt = _workload->ground_truth();
    _cold_set.insert(gt.cold_ids.begin(), gt.cold_ids.end());
    _hot_set.insert(gt.hot_ids.begin(), gt.hot_ids.end());
  }

  RunReport run() {
    std::ofstream trace_out;
    std::optional<TraceWriter> writer;
    if (!_cfg.record_trace_path.empty()) {
      trace_out.open(_cfg.record_trace_path, std::ios::binary | std::ios::trunc);
      if (!trace_out) throw IoError("cannot write trace file: " + _cfg.record_trace_path);
      writer.emplace(trace_out, *_workload);
    }

    const SimTime duration = _workload->duration_ms();
    for (SimTime now = 0; now < duration; ++now) {
      const auto& events = _workload->step(now);
      if (writer) writer->append(events);
      for (const TraceEvent& ev : events) apply_event(ev, now);
      if (now % _cfg.sampling.poll_interval_ms == 0) poll_and_walk(now);
    }
    // Flush the last completed walks and close open episodes.
    harvest_only(duration);
    close_open_episodes(duration);
    finish(duration);
    return std::move(_report);
  }

  // GcEvents
  void before_cold_collection(const Heap& heap, RegionId rid, SimTime now) override {
    const Region& region = heap.region(rid);
    ColdCapture cap;
    cap.t_end = now;
    cap.stack_last = region.t_inactive;
    cap.oracle_last = _oracle ? _oracle->last_transition(rid) : 0;
    cap.overflowed = region.remembered_set == RememberedSetState::Overflowed;
    for (ObjectId oid : region.objects) {
      const HeapObject* o = heap.find_object(oid);
      if (!o || o->region != rid) continue;
      if (!region.mark_map.test(o->base_slot)) continue;
      if (region.activity_map.test(o->base_slot)) continue;
      cap.inactive += 1;
      if (_oracle && _oracle->active(rid, oid)) cap.false_inactive += 1;
    }
    _captures[rid] = cap;
  }

  void on_cold_collection(RegionId rid, const std::vector<ObjectId>& moved,
                          std::uint64_t bytes, SimTime now) override {
    ColdEventRow row;
    row.cycle = _cycle;
    row.time = now;
    row.region = rid;
    row.objects = moved.size();
    row.bytes = bytes;
    _report.cold_events.push_back(row);
    _report.summary.cold_events_objects += moved.size();
    _report.summary.cold_events_bytes += bytes;
    for (ObjectId oid : moved) {
      if (_cold_set.count(oid)) {
        _planted_cold_harvested.insert(oid);
      } else if (_hot_set.count(oid)) {
        _report.summary.planted_hot_in_cold_area += 1;
      }
    }
  }

private:
  void apply_event(const TraceEvent& ev, SimTime now) {
    switch (ev.kind) {
      case EventKind::Alloc: {
        const ObjectId id = allocate_with_gc(ev, now);
        if (id != ev.object)
          throw UsageError("scenario: allocation id diverged from the event stream");
        break;
      }
      case EventKind::Kill:
        _heap.kill(ev.object);
        break;
      case EventKind::Read:
      case EventKind::Write: {
        if (_oracle) _oracle->record_access(_heap, ev.object, now);
        if (ev.surface) {
          MutatorThread& t = thread(ev.thread);
          if (t.has_frames()) t.top_frame().place_ref(ev.object);
        }
        break;
      }
      case EventKind::Push:
        thread(ev.thread).push_frame(ev.slots);
        break;
      case EventKind::Pop:
        thread(ev.thread).pop_frame();
        break;
    }
  }

  MutatorThread& thread(std::uint32_t id) {
    if (id >= _threads.size()) throw UsageError("scenario: event for unknown thread");
    return _threads[id];
  }

  ObjectId allocate_with_gc(const TraceEvent& ev, SimTime now) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto id = _heap.allocate(ev.obj_kind, ev.size, ev.refs, now);
      if (id) return *id;
      if (!collect_for_allocation(now))
        throw UsageError("scenario: heap exhausted, allocation cannot be satisfied");
    }
    throw UsageError("scenario: allocation retry limit exceeded");
  }

  // Returns false when no further collection can make progress. A partial
  // cycle that frees no region escalates to a global cycle (clearing
  // floating garbage); a second consecutive dead end means the heap is
  // genuinely exhausted.
  bool collect_for_allocation(SimTime now) {
    advance_remembered_sets(_heap, _cfg.gc.rs_overflow_prob, _gc_rng);
    const auto cs = select_collection_set(_heap, now, _cfg.policy, _cfg.gc);
    if (!cs.regions.empty()) {
      const bool progressed = partial_cycle(now, cs);
      if (progressed) {
        _escalated_global = false;
        return true;
      }
    }
    if (_escalated_global) return false;
    _escalated_global = true;
    global_cycle(now);
    return true;
  }

  void poll_and_walk(SimTime now) {
    const HarvestStats stats = daemon_poll(_threads, _heap, now, _last_gc_end);
    _window_stats += stats;
    _total_stats += stats;
    for (MutatorThread& t : _threads) {
      if (!t.walk_pending) continue;
      const WalkResult wr = walk_stack(t, now, _cfg.sampling);
      _report.summary.frames_walked += wr.frames_walked;
    }
  }

  void harvest_only(SimTime now) {
    const HarvestStats stats = daemon_poll(_threads, _heap, now, _last_gc_end);
    _window_stats += stats;
    _total_stats += stats;
  }

  bool partial_cycle(SimTime now, const CollectionSet& cs) {
    auto result = run_partial_gc(_heap, cs, now, _cfg.policy, this);
    _cycle += 1;
    _partials_since_global += 1;

    process_unpins(result.unpin_decisions, now);
    if (result.cold_area_filled) {
      _pinning_suppressed = true;
      _cold_free_watermark = _heap.cold_free_bytes();
    }

    const bool global_due = result.cold_area_filled ||
                            _partials_since_global >= _cfg.gc.global_gc_every;
    const bool allow_pinning = !_pinning_suppressed && !global_due;
    auto decisions = end_of_cycle(_heap, _cfg.policy, now, allow_pinning);
    process_unpins(decisions, now);
    for (const PinDecision& d : decisions) {
      if (d.action != PinAction::Pin) continue;
      open_episode(d.region_id, now);
    }
    note_selectable(decisions);

    append_row(now);
    _last_gc_end = now;
    if (global_due) global_cycle(now);
    return result.regions_evacuated > 0;
  }

  void global_cycle(SimTime now) {
    auto result = run_global_gc(_heap, now, this);
    process_unpins(result.unpin_decisions, now);
    _report.summary.global_cycles += 1;
    _report.summary.cold_reclaimed_objects += result.cold_objects_reclaimed;
    _report.summary.cold_reclaimed_bytes += result.cold_bytes_reclaimed;
    _partials_since_global = 0;
    if (_pinning_suppressed && _heap.cold_free_bytes() > _cold_free_watermark)
      _pinning_suppressed = false;
    _last_gc_end = now;
  }

  void open_episode(RegionId rid, SimTime now) {
    EpisodeState st;
    st.id = _next_episode++;
    st.t_pinned = now;
    _open_episodes[rid] = st;
    if (_oracle) _oracle->on_pin(rid, now);
    _report.summary.pin_events += 1;
  }

  void process_unpins(const std::vector<PinDecision>& decisions, SimTime now) {
    for (const PinDecision& d : decisions) {
      if (d.action != PinAction::Unpin) continue;
      close_episode(d.region_id, now, d.reason);
      _report.summary.unpin_events += 1;
    }
  }

  void close_episode(RegionId rid, SimTime now, std::optional<UnpinReason> reason) {
    auto it = _open_episodes.find(rid);
    if (it == _open_episodes.end())
      throw UsageError("scenario: unpin for a region with no open episode");
    EpisodeRecord rec;
    rec.episode = it->second.id;
    rec.region = rid;
    rec.t_pinned = it->second.t_pinned;
    rec.t_end = now;
    rec.end_reason = reason;
    rec.oracle_enabled = _oracle.has_value();
    const bool collected = reason && *reason == UnpinReason::WentCold;
    rec.cold_collected = collected;
    if (collected) {
      auto cap = _captures.find(rid);
      if (cap == _captures.end())
        throw UsageError("scenario: cold collection without a capture");
      rec.stack_last_transition = cap->second.stack_last;
      rec.oracle_last_transition = cap->second.oracle_last;
      rec.inactive_objects = cap->second.inactive;
      rec.false_inactive = cap->second.false_inactive;
      rec.collected_while_overflowed = cap->second.overflowed;
      _captures.erase(cap);
      _report.summary.inactive_objects += rec.inactive_objects;
      _report.summary.false_inactive_objects += rec.false_inactive;
    } else {
      // The region still holds its stamps: policy and global unpins do not
      // reset the region.
      rec.stack_last_transition = _heap.region(rid).t_inactive;
      rec.oracle_last_transition = _oracle ? _oracle->last_transition(rid) : 0;
    }
    rec.stack_collectible =
        (rec.t_end - rec.stack_last_transition) > _cfg.policy.t_cold_ms;
    rec.oracle_collectible =
        _oracle && (rec.t_end - rec.oracle_last_transition) > _cfg.policy.t_cold_ms;
    _report.episodes.push_back(rec);
    _open_episodes.erase(it);
    if (_oracle) _oracle->on_unpin(rid);
  }

  void close_open_episodes(SimTime now) {
    std::vector<RegionId> open;
    for (const auto& [rid, st] : _open_episodes) open.push_back(rid);
    std::sort(open.begin(), open.end());
    for (RegionId rid : open) close_episode(rid, now, std::nullopt);
  }

  // Planted cold objects resident in a region the policy judged selectable.
  void note_selectable(const std::vector<PinDecision>& decisions) {
    for (const PinDecision& d : decisions) {
      if (d.action != PinAction::Pin && d.action != PinAction::Hold) continue;
      const Region& r = _heap.region(d.region_id);
      for (ObjectId oid : r.objects) {
        if (!_cold_set.count(oid)) continue;
        const HeapObject* o = _heap.find_object(oid);
        if (!o || o->region != d.region_id) continue;
        _planted_cold_selectable.insert(oid);
      }
    }
  }

  void append_row(SimTime now) {
    CycleRow row;
    row.cycle = _cycle;
    row.time = now;
    const auto counts = _heap.region_counts_by_state();
    row.young_regions = counts[static_cast<std::size_t>(RegionState::Young)];
    row.unpinned_regions = counts[static_cast<std::size_t>(RegionState::Unpinned)];
    row.pinned_regions = counts[static_cast<std::size_t>(RegionState::Pinned)];
    row.cold_regions = counts[static_cast<std::size_t>(RegionState::Cold)];
    row.refs_young = _window_stats.per_class_refs[static_cast<std::size_t>(RegionState::Young)];
    row.refs_unpinned = _window_stats.per_class_refs[static_cast<std::size_t>(RegionState::Unpinned)];
    row.refs_pinned = _window_stats.per_class_refs[static_cast<std::size_t>(RegionState::Pinned)];
    row.refs_cold = _window_stats.per_class_refs[static_cast<std::size_t>(RegionState::Cold)];
    _report.rows.push_back(row);
    _window_stats = HarvestStats{};
  }

  void finish(SimTime duration) {
    RunSummary& s = _report.summary;
    s.oracle_enabled = _oracle.has_value();
    s.partial_cycles = _cycle;
    s.total_cold_objects = s.cold_events_objects - s.cold_reclaimed_objects;
    s.total_cold_bytes = s.cold_events_bytes - s.cold_reclaimed_bytes;
    s.cold_area_ref_count =
        _total_stats.per_class_refs[static_cast<std::size_t>(RegionState::Cold)];
    s.distinct_cold_objects_referenced = _heap.cold_activity_transitions();
    s.samples_harvested = _total_stats.samples_harvested;
    s.samples_discarded_stale = _total_stats.samples_discarded_stale;
    s.activity_bits_tested =
        _total_stats.per_class_refs[static_cast<std::size_t>(RegionState::Pinned)] +
        _total_stats.per_class_refs[static_cast<std::size_t>(RegionState::Cold)];
    s.activity_bits_set = _total_stats.activity_transitions;
    s.cold_ref_field_reads = _heap.cold_ref_reads();
    s.false_inactivity_ratio =
        s.inactive_objects == 0
            ? 0.0
            : static_cast<double>(s.false_inactive_objects) /
                  static_cast<double>(s.inactive_objects);

    if (!_report.rows.empty()) {
      double pinned_sum = 0.0;
      for (const CycleRow& row : _report.rows) pinned_sum += row.pinned_regions;
      s.mean_pinned_regions = pinned_sum / static_cast<double>(_report.rows.size());
    }

    double stack_conv_sum = 0.0, oracle_conv_sum = 0.0;
    std::uint64_t stack_conv_n = 0, oracle_conv_n = 0;
    for (const EpisodeRecord& e : _report.episodes) {
      if (e.stack_collectible) {
        s.stack_collectible_episodes += 1;
        stack_conv_sum += static_cast<double>(e.stack_last_transition - e.t_pinned);
        stack_conv_n += 1;
      }
      if (e.oracle_collectible) {
        s.oracle_collectible_episodes += 1;
        oracle_conv_sum += static_cast<double>(e.oracle_last_transition - e.t_pinned);
        oracle_conv_n += 1;
      }
    }
    if (stack_conv_n > 0) s.mean_stack_convergence_ms = stack_conv_sum / stack_conv_n;
    if (oracle_conv_n > 0) s.mean_oracle_convergence_ms = oracle_conv_sum / oracle_conv_n;
    if (_oracle && !_report.episodes.empty())
      s.fully_included = compare_detectors(_report.episodes).fully_included;

    for (ObjectId oid : _cold_set) {
      const HeapObject* o = _heap.find_object(oid);
      if (o) s.planted_cold_bytes += o->size;
    }
    for (ObjectId oid : _planted_cold_selectable) {
      const HeapObject* o = _heap.find_object(oid);
      if (o) s.planted_cold_bytes_selectable += o->size;
    }
    for (ObjectId oid : _planted_cold_harvested) {
      const HeapObject* o = _heap.find_object(oid);
      if (o) s.planted_cold_bytes_harvested += o->size;
    }
    s.final_live_objects = _heap.live_object_count();

    // End-of-run hygiene: cold-area contents and bitmap discipline, and the
    // marker must never have read a reference field inside a cold region.
    _heap.check_invariants();
    if (_heap.cold_ref_reads() != 0)
      throw UsageError("scenario: marker read reference fields inside the cold area");
    (void)duration;
  }

  ScenarioConfig _cfg;
  Heap _heap;
  std::unique_ptr<Workload> _workload;
  std::optional<AccessOracle> _oracle;
  std::vector<MutatorThread> _threads;
  std::mt19937_64 _gc_rng;
  RunReport _report;

  std::uint64_t _cycle = 0;
  std::uint32_t _partials_since_global = 0;
  SimTime _last_gc_end = 0;
  bool _escalated_global = false;
  bool _pinning_suppressed = false;
  std::uint64_t _cold_free_watermark = 0;
  HarvestStats _window_stats;
  HarvestStats _total_stats;

  std::uint64_t _next_episode = 1;
  std::unordered_map<RegionId, EpisodeState> _open_episodes;
  std::unordered_map<RegionId, ColdCapture> _captures;

  std::unordered_set<ObjectId> _cold_set;
  std::unordered_set<ObjectId> _hot_set;
  std::unordered_set<ObjectId> _planted_cold_selectable;
  std::unordered_set<ObjectId> _planted_cold_harvested;
};

} // namespace

RunReport run_scenario(const ScenarioConfig& config) {
  config.validate();
  ScenarioRun run(config);
  return run.run();
}

} // namespace coldsim
