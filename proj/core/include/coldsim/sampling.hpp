#ifndef COLDSIM_SAMPLING_HPP
#define COLDSIM_SAMPLING_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "coldsim/heap.hpp"

namespace coldsim {

// A stack slot holds either a heap reference or an opaque primitive value.
struct Slot {
  bool is_ref = false;
  std::uint64_t value = 0;
};

// One mutator stack frame. The frame base is the frame's depth index: a
// frame popped and re-pushed at the same depth reuses the base, so walk
// termination depends on the content hash exactly as it would on a real
// stack.
struct Frame {
  std::uint32_t frame_base = 0;
  std::vector<Slot> slots;
  // Rotation point for reference placements; not part of the content hash.
  std::uint32_t ring_cursor = 0;

  void place_ref(ObjectId id) {
    if (slots.empty()) slots.push_back(Slot{});
    slots[ring_cursor % slots.size()] = Slot{true, id};
    ring_cursor += 1;
  }
};

struct FrameTrace {
  std::uint32_t frame_base = 0;
  std::uint64_t content_hash = 0;
};

struct RefSample {
  ObjectId object = kNoObject;
  SimTime sample_time = 0;
};

struct SamplingConfig {
  SimTime poll_interval_ms = 1;
  std::uint32_t ref_buffer_capacity = 512;
  std::uint32_t trace_capacity = 128;

  void validate() const;
};

struct MutatorThread {
  std::uint32_t id = 0;
  std::vector<Frame> stack; // bottom first, top last
  std::vector<RefSample> ref_buffer;
  // Traces from the previous and current walk, top-down (descending bases).
  std::vector<FrameTrace> prev_traces;
  std::vector<FrameTrace> curr_traces;
  SimTime w_start = 0;
  SimTime w_end = 0;
  bool instrumented = false;
  bool walk_pending = false;
  bool harvest_ready = false;

  Frame& push_frame(std::vector<Slot> slots);
  void pop_frame();
  bool has_frames() const { return !stack.empty(); }
  Frame& top_frame();
  std::uint32_t depth() const { return static_cast<std::uint32_t>(stack.size()); }
};

struct WalkResult {
  std::vector<ObjectId> samples;
  std::vector<FrameTrace> new_traces;
  bool stopped_early = false; // reference buffer overflow
  std::uint32_t frames_walked = 0;
};

struct HarvestStats {
  std::uint64_t samples_harvested = 0;
  std::uint64_t samples_discarded_stale = 0;
  std::uint64_t activity_transitions = 0;
  // Indexed by RegionState: young, unpinned, pinned, cold.
  std::array<std::uint64_t, 4> per_class_refs{};

  HarvestStats& operator+=(const HarvestStats& other);
};

// Stable 64-bit digest over a frame's slot values (FNV-1a).
std::uint64_t frame_fingerprint(const Frame& frame);

// Walks the stack top-down, collecting distinct heap references from each
// frame until one matches the previous walk by (base, hash). The walk is
// discontinued if the reference buffer fills (collected samples are kept).
// If the trace array fills, walking and collecting continue unrecorded
// until a match, and the next previous stack is spliced from the head of
// the current walk and the tail of the previous one.
WalkResult walk_stack(MutatorThread& thread, SimTime now, const SamplingConfig& config);

// One daemon polling cycle: instruments new threads, harvests completed
// walks (discarding whole walks that started before the most recent GC),
// bumps the containing region's reference counter for each retained sample,
// sets activity bits for samples into pinned or cold regions, and signals
// the next walk.
HarvestStats daemon_poll(std::vector<MutatorThread>& threads, Heap& heap,
                         SimTime now, SimTime last_gc_end);

} // namespace coldsim

#endif // COLDSIM_SAMPLING_HPP
