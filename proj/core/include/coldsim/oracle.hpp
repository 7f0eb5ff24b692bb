#ifndef COLDSIM_ORACLE_HPP
#define COLDSIM_ORACLE_HPP

#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "coldsim/heap.hpp"
#include "coldsim/pinning.hpp"

namespace coldsim {

enum class Detector : std::uint8_t { StackSampling, AccessBarrier };

// Full-precision access record: sees every read/write the workload emits.
// Keeps a per-object last-access timestamp for the whole run and, for each
// pinned or cold region, the set of objects accessed since instrumentation
// began (the barrier-side counterpart of the region activity map).
class AccessOracle {
public:
  explicit AccessOracle(const Heap& heap);

  void on_pin(RegionId region, SimTime now);
  void on_unpin(RegionId region);

  // Records an access. Updates the object's last-access time always; if the
  // object sits in an instrumented region the region's access set gains the
  // object (idempotently), advancing the region's last-transition time on
  // first sight.
  void record_access(const Heap& heap, ObjectId id, SimTime now);

  bool instrumented(RegionId region) const { return _regions.count(region) != 0; }
  bool active(RegionId region, ObjectId id) const;
  // Time of the most recent first-sight of any object in the region; equals
  // the instrumentation time while nothing has been seen.
  SimTime last_transition(RegionId region) const;
  std::optional<SimTime> last_access_time(ObjectId id) const;

private:
  struct RegionWatch {
    std::unordered_set<ObjectId> seen;
    SimTime last_transition = 0;
  };
  std::unordered_map<RegionId, RegionWatch> _regions;
  std::unordered_map<ObjectId, SimTime> _last_access;
};

// One pinned-region episode: from pin to cold collection, unpin, or run end.
// Collectibility under a detector means the detector's activity record was
// quiescent for more than T_cold when the episode ended.
struct EpisodeRecord {
  std::uint64_t episode = 0;
  RegionId region = 0;
  SimTime t_pinned = 0;
  SimTime t_end = 0;
  std::optional<UnpinReason> end_reason; // empty: episode ran to end of run
  bool cold_collected = false;
  // Remembered-set state observed when the region was cold collected.
  bool collected_while_overflowed = false;
  SimTime stack_last_transition = 0;
  SimTime oracle_last_transition = 0;
  bool stack_collectible = false;
  bool oracle_collectible = false;
  std::uint64_t inactive_objects = 0;     // stack-inactive at collection
  std::uint64_t false_inactive = 0;       // of those, oracle-active
  bool oracle_enabled = false;
};

struct FalseInactivityResult {
  std::uint64_t count = 0;
  double ratio = 0.0;
};

// count = |stack_inactive ∩ oracle_active|, ratio = count / all_inactive.
FalseInactivityResult false_inactivity(const std::vector<ObjectId>& stack_inactive,
                                       const std::unordered_set<ObjectId>& oracle_active,
                                       std::uint64_t all_inactive_count);

// Time from pinning until the detector's activity record stabilized, for an
// episode that converged under that detector; nullopt otherwise.
std::optional<SimTime> convergence_time(const EpisodeRecord& episode, Detector detector);

struct InclusionReport {
  std::vector<std::uint64_t> stack_collectible_episodes;
  std::vector<std::uint64_t> oracle_collectible_episodes;
  bool fully_included = false;
  struct ConvergencePair {
    std::uint64_t episode;
    RegionId region;
    SimTime stack_ms;
    SimTime oracle_ms;
  };
  std::vector<ConvergencePair> common;
};

// Region-set inclusion and paired convergence times over one run's episodes.
// Requires records from an oracle-enabled run.
InclusionReport compare_detectors(const std::vector<EpisodeRecord>& episodes);

} // namespace coldsim

#endif // COLDSIM_ORACLE_HPP
