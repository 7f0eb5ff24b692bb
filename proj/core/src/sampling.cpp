#include "coldsim/sampling.hpp"

#include <algorithm>

namespace coldsim {

void SamplingConfig::validate() const {
  if (poll_interval_ms == 0) throw ConfigError("sampling: poll interval must be positive");
  if (ref_buffer_capacity == 0) throw ConfigError("sampling: ref buffer capacity must be positive");
  if (trace_capacity == 0) throw ConfigError("sampling: trace capacity must be positive");
}

Frame& MutatorThread::push_frame(std::vector<Slot> slots) {
  Frame f;
  f.frame_base = depth();
  f.slots = std::move(slots);
  stack.push_back(std::move(f));
  return stack.back();
}

void MutatorThread::pop_frame() {
  if (stack.empty()) throw UsageError("pop_frame: stack is empty");
  stack.pop_back();
}

Frame& MutatorThread::top_frame() {
  if (stack.empty()) throw UsageError("top_frame: stack is empty");
  return stack.back();
}

HarvestStats& HarvestStats::operator+=(const HarvestStats& other) {
  samples_harvested += other.samples_harvested;
  samples_discarded_stale += other.samples_discarded_stale;
  activity_transitions += other.activity_transitions;
  for (std::size_t i = 0; i < per_class_refs.size(); ++i)
    per_class_refs[i] += other.per_class_refs[i];
  return *this;
}

std::uint64_t frame_fingerprint(const Frame& frame) {
  std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a offset basis
  auto mix = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 0x100000001b3ull;
  };
  for (const Slot& s : frame.slots) {
    mix(s.is_ref ? 1 : 0);
    std::uint64_t v = s.value;
    for (int i = 0; i < 8; ++i) {
      mix(static_cast<std::uint8_t>(v & 0xff));
      v >>= 8;
    }
  }
  return h;
}

namespace {

const FrameTrace* find_trace(const std::vector<FrameTrace>& traces, std::uint32_t base) {
  for (const FrameTrace& t : traces)
    if (t.frame_base == base) return &t;
  return nullptr;
}

bool buffer_contains(const std::vector<RefSample>& buffer, ObjectId id) {
  for (const RefSample& s : buffer)
    if (s.object == id) return true;
  return false;
}

} // namespace

WalkResult walk_stack(MutatorThread& thread, SimTime now, const SamplingConfig& config) {
  if (!thread.walk_pending) throw UsageError("walk_stack: no walk pending");

  WalkResult result;
  thread.w_start = now;
  thread.ref_buffer.clear();
  thread.curr_traces.clear();

  bool matched = false;
  std::uint32_t stop_base = 0;   // base of the matched frame
  bool overflowed = false;
  std::uint32_t overflow_base = 0;

  for (auto it = thread.stack.rbegin(); it != thread.stack.rend(); ++it) {
    const Frame& frame = *it;
    const FrameTrace trace{frame.frame_base, frame_fingerprint(frame)};
    if (const FrameTrace* prev = find_trace(thread.prev_traces, frame.frame_base)) {
      if (prev->content_hash == trace.content_hash) {
        matched = true;
        stop_base = frame.frame_base;
        break;
      }
    }
    result.frames_walked += 1;

    for (const Slot& s : frame.slots) {
      if (!s.is_ref || s.value == kNoObject) continue;
      if (buffer_contains(thread.ref_buffer, s.value)) continue;
      if (thread.ref_buffer.size() >= config.ref_buffer_capacity) {
        overflowed = true;
        break;
      }
      thread.ref_buffer.push_back({s.value, now});
    }
    if (overflowed) {
      overflow_base = frame.frame_base;
      break;
    }
    if (thread.curr_traces.size() < config.trace_capacity)
      thread.curr_traces.push_back(trace);
  }

  // Compose the next previous stack: the head walked this time plus the
  // tail of the last walk below the stopping point.
  std::vector<FrameTrace> next_prev = thread.curr_traces;
  if (overflowed || matched) {
    for (const FrameTrace& t : thread.prev_traces) {
      if (next_prev.size() >= config.trace_capacity) break;
      const bool below = overflowed ? t.frame_base < overflow_base
                                    : t.frame_base <= stop_base;
      if (below) next_prev.push_back(t);
    }
  }
  thread.prev_traces = std::move(next_prev);

  thread.w_end = now;
  thread.walk_pending = false;
  thread.harvest_ready = true;

  result.samples.reserve(thread.ref_buffer.size());
  for (const RefSample& s : thread.ref_buffer) result.samples.push_back(s.object);
  result.new_traces = thread.curr_traces;
  result.stopped_early = overflowed;
  return result;
}

HarvestStats daemon_poll(std::vector<MutatorThread>& threads, Heap& heap,
                         SimTime now, SimTime last_gc_end) {
  HarvestStats stats;
  for (MutatorThread& thread : threads) {
    if (!thread.instrumented) {
      thread.instrumented = true;
      thread.walk_pending = true;
      continue;
    }
    if (!thread.harvest_ready) continue;

    if (thread.w_start < last_gc_end) {
      // The walk straddled a GC cycle; its samples refer to pre-GC state.
      stats.samples_discarded_stale += thread.ref_buffer.size();
    } else {
      for (const RefSample& sample : thread.ref_buffer) {
        const auto rid = heap.region_of(sample.object);
        if (!rid) {
          stats.samples_discarded_stale += 1;
          continue;
        }
        heap.count_reference(*rid);
        const RegionState state = heap.region(*rid).state;
        stats.per_class_refs[static_cast<std::size_t>(state)] += 1;
        stats.samples_harvested += 1;
        if (state == RegionState::Pinned || state == RegionState::Cold) {
          if (heap.set_activity(*rid, sample.object, now))
            stats.activity_transitions += 1;
        }
      }
    }
    thread.ref_buffer.clear();
    thread.harvest_ready = false;
    thread.walk_pending = true;
  }
  return stats;
}

} // namespace coldsim
