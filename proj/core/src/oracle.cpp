#include "coldsim/oracle.hpp"

#include <algorithm>

namespace coldsim {

AccessOracle::AccessOracle(const Heap& heap) {
  // Cold regions are instrumented from the start of the run.
  for (RegionId id : heap.regions_in_state(RegionState::Cold)) {
    _regions.emplace(id, RegionWatch{});
  }
}

void AccessOracle::on_pin(RegionId region, SimTime now) {
  RegionWatch watch;
  watch.last_transition = now;
  _regions[region] = std::move(watch);
}

void AccessOracle::on_unpin(RegionId region) { _regions.erase(region); }

void AccessOracle::record_access(const Heap& heap, ObjectId id, SimTime now) {
  _last_access[id] = now;
  const auto rid = heap.region_of(id);
  if (!rid) throw UsageError("record_access: object is not live");
  auto it = _regions.find(*rid);
  if (it == _regions.end()) return;
  if (it->second.seen.insert(id).second) it->second.last_transition = now;
}

bool AccessOracle::active(RegionId region, ObjectId id) const {
  auto it = _regions.find(region);
  return it != _regions.end() && it->second.seen.count(id) != 0;
}

SimTime AccessOracle::last_transition(RegionId region) const {
  auto it = _regions.find(region);
  if (it == _regions.end())
    throw UsageError("last_transition: region is not instrumented");
  return it->second.last_transition;
}

std::optional<SimTime> AccessOracle::last_access_time(ObjectId id) const {
  auto it = _last_access.find(id);
  if (it == _last_access.end()) return std::nullopt;
  return it->second;
}

FalseInactivityResult false_inactivity(const std::vector<ObjectId>& stack_inactive,
                                       const std::unordered_set<ObjectId>& oracle_active,
                                       std::uint64_t all_inactive_count) {
  FalseInactivityResult result;
  for (ObjectId id : stack_inactive)
    if (oracle_active.count(id)) result.count += 1;
  result.ratio = all_inactive_count == 0
                     ? 0.0
                     : static_cast<double>(result.count) /
                           static_cast<double>(all_inactive_count);
  return result;
}

std::optional<SimTime> convergence_time(const EpisodeRecord& episode, Detector detector) {
  const bool converged = detector == Detector::StackSampling
                             ? episode.stack_collectible
                             : episode.oracle_collectible;
  if (!converged) return std::nullopt;
  const SimTime last = detector == Detector::StackSampling
                           ? episode.stack_last_transition
                           : episode.oracle_last_transition;
  return last - episode.t_pinned;
}

InclusionReport compare_detectors(const std::vector<EpisodeRecord>& episodes) {
  InclusionReport report;
  for (const EpisodeRecord& e : episodes) {
    if (!e.oracle_enabled)
      throw UsageError("compare_detectors: episodes lack access-barrier data");
    if (e.stack_collectible) report.stack_collectible_episodes.push_back(e.episode);
    if (e.oracle_collectible) report.oracle_collectible_episodes.push_back(e.episode);
    if (e.stack_collectible && e.oracle_collectible) {
      report.common.push_back({e.episode, e.region,
                               e.stack_last_transition - e.t_pinned,
                               e.oracle_last_transition - e.t_pinned});
    }
  }
  report.fully_included = std::includes(report.oracle_collectible_episodes.begin(),
                                        report.oracle_collectible_episodes.end(),
                                        report.stack_collectible_episodes.begin(),
                                        report.stack_collectible_episodes.end());
  return report;
}

} // namespace coldsim
