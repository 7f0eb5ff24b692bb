#ifndef COLDSIM_WORKLOAD_HPP
#define COLDSIM_WORKLOAD_HPP

#include <iosfwd>
#include <memory>
#include <vector>

#include "coldsim/heap.hpp"
#include "coldsim/sampling.hpp"

namespace coldsim {

struct WorkloadSpec {
  std::uint64_t seed = 1;
  SimTime duration_ms = 60'000;
  std::uint32_t thread_count = 4;
  double alloc_rate = 1.0; // churn objects per ms
  std::uint64_t size_min_bytes = 64;
  std::uint64_t size_max_bytes = 1024;
  double kind_mix_primitive_array = 0.4;
  double kind_mix_leaf = 0.4;
  double kind_mix_internal = 0.2;
  std::uint64_t hot_set_size = 1000;
  double hot_access_rate = 2.0; // accesses per ms over the hot set
  std::uint64_t cold_set_size = 1000;
  double cold_access_rate = 0.0; // accesses per ms over the planted cold set
  std::uint32_t call_depth_min = 4;
  std::uint32_t call_depth_max = 32;
  std::uint32_t frame_ref_fanout = 16;
  // Fraction of accesses whose reference lands in a stack frame and is
  // therefore visible to the sampler.
  double frame_surface_fraction = 1.0;

  void validate() const; // throws ConfigError
};

enum class EventKind : std::uint8_t { Alloc, Kill, Read, Write, Push, Pop };

const char* to_string(EventKind k);

struct TraceEvent {
  SimTime time = 0;
  EventKind kind = EventKind::Alloc;
  std::uint32_t thread = 0;
  ObjectId object = kNoObject;      // Alloc, Kill, Read, Write
  ObjectKind obj_kind = ObjectKind::Leaf; // Alloc
  std::uint64_t size = 0;           // Alloc
  std::vector<ObjectId> refs;       // Alloc (internal objects)
  bool surface = false;             // Read/Write: reference enters a frame
  std::vector<Slot> slots;          // Push: initial frame slots
};

struct GroundTruth {
  std::vector<ObjectId> cold_ids; // sorted
  std::vector<ObjectId> hot_ids;  // sorted
};

// Deterministic mutator event source. Generated workloads plant a cold set
// (allocated early, retained for the whole run, collectible kinds only) and
// a hot set accessed on a steady rotation; replayed workloads feed back a
// recorded trace byte for byte.
class Workload {
public:
  virtual ~Workload() = default;
  virtual const std::vector<TraceEvent>& step(SimTime now) = 0;
  virtual const GroundTruth& ground_truth() const = 0;
  virtual SimTime duration_ms() const = 0;
  virtual std::uint32_t thread_count() const = 0;
};

// Builds the generator; the heap configuration bounds feasibility (a planted
// set that cannot fit the mutator heap is a configuration error).
std::unique_ptr<Workload> build_workload(const WorkloadSpec& spec, const HeapConfig& heap);

// Reads a recorded trace. Malformed input raises ConfigError naming the line.
std::unique_ptr<Workload> replay_trace(std::istream& in);
std::unique_ptr<Workload> replay_trace_file(const std::string& path);

// Line-oriented trace recording: header (duration, threads, planted sets)
// then one event per line.
class TraceWriter {
public:
  TraceWriter(std::ostream& out, const Workload& workload);
  void append(const std::vector<TraceEvent>& events);

private:
  std::ostream& _out;
};

} // namespace coldsim

#endif // COLDSIM_WORKLOAD_HPP
