#include "coldsim/pinning.hpp"

#include <algorithm>

namespace coldsim {

const char* to_string(PinningStrategy s) {
  switch (s) {
    case PinningStrategy::None: return "none";
    case PinningStrategy::Selective: return "selective";
    case PinningStrategy::Unselective: return "unselective";
  }
  return "?";
}

const char* to_string(PinAction a) {
  switch (a) {
    case PinAction::Pin: return "pin";
    case PinAction::Unpin: return "unpin";
    case PinAction::Hold: return "hold";
  }
  return "?";
}

const char* to_string(UnpinReason r) {
  switch (r) {
    case UnpinReason::LowDensity: return "low_density";
    case UnpinReason::LowCollectibleMass: return "low_collectible_mass";
    case UnpinReason::WentCold: return "went_cold";
    case UnpinReason::GlobalGc: return "global_gc";
    case UnpinReason::ColdAreaFull: return "cold_area_full";
  }
  return "?";
}

void PolicyConfig::validate() const {
  if (!(0.0 <= d_lo && d_lo < d_hi && d_hi <= 1.0))
    throw ConfigError("policy: need 0 <= d_lo < d_hi <= 1");
  if (p_max < 1) throw ConfigError("policy: p_max must be >= 1");
  if (t_cold_ms == 0) throw ConfigError("policy: t_cold_ms must be positive");
  if (collectible_floor < 0.0 || collectible_floor > 1.0)
    throw ConfigError("policy: collectible_floor must be in [0,1]");
}

double update_mma(double prev_mma, std::uint64_t r) {
  return (7.0 * prev_mma + static_cast<double>(r)) / 8.0;
}

double pinning_metric(double mma_r, double d) { return mma_r * d; }

bool is_selectable(const Region& region, const PolicyConfig& config) {
  if (region.state != RegionState::Unpinned) return false;
  if (!(region.census.d > config.d_hi)) return false;
  const double floor = config.collectible_floor * static_cast<double>(region.size_bytes);
  return static_cast<double>(region.census.m_collectible) > floor;
}

namespace {

struct RankedCandidate {
  RegionId id;
  double p;
};

void rank(std::vector<RankedCandidate>& v) {
  std::sort(v.begin(), v.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.p != b.p) return a.p > b.p;
    return a.id < b.id;
  });
}

} // namespace

std::vector<PinDecision> select_to_pin(Heap& heap,
                                       const std::vector<RegionId>& candidates,
                                       std::uint32_t n_pinned,
                                       const PolicyConfig& config, SimTime now) {
  std::vector<PinDecision> decisions;
  if (candidates.empty()) return decisions;

  std::vector<RankedCandidate> ranked;
  ranked.reserve(candidates.size());
  for (RegionId id : candidates) {
    const Region& r = heap.region(id);
    ranked.push_back({id, pinning_metric(r.mma_r, r.census.d)});
  }

  std::vector<RankedCandidate> eligible;
  if (config.strategy == PinningStrategy::Selective) {
    double p_sum = 0.0;
    std::uint64_t p_count = 0;
    for (const RankedCandidate& c : ranked) {
      if (c.p > 0.0) {
        p_sum += c.p;
        p_count += 1;
      }
    }
    if (p_count > 0) {
      const double p_avg = p_sum / static_cast<double>(p_count);
      for (const RankedCandidate& c : ranked) {
        const Region& r = heap.region(c.id);
        const bool active = r.mma_r > static_cast<double>(r.r) && r.r > 0;
        const bool persistent =
            static_cast<double>(r.sum_r) > config.sum_r_threshold(r.size_bytes);
        if (active && persistent && c.p > p_avg) eligible.push_back(c);
      }
    }
  } else {
    eligible = ranked;
  }
  rank(eligible);

  const std::uint32_t budget = n_pinned < config.p_max ? config.p_max - n_pinned : 0;
  std::uint32_t pinned = 0;
  for (const RankedCandidate& c : eligible) {
    if (pinned >= budget) break;
    heap.pin_region(c.id, now);
    decisions.push_back({c.id, c.p, PinAction::Pin, std::nullopt});
    pinned += 1;
  }
  for (const RankedCandidate& c : ranked) {
    const bool was_pinned = std::any_of(
        decisions.begin(), decisions.end(), [&](const PinDecision& d) {
          return d.action == PinAction::Pin && d.region_id == c.id;
        });
    if (!was_pinned) decisions.push_back({c.id, c.p, PinAction::Hold, std::nullopt});
  }
  return decisions;
}

std::optional<UnpinReason> unpin_reason(const Region& region, SimTime now,
                                        const PolicyConfig& config) {
  if (region.state != RegionState::Pinned)
    throw UsageError("unpin_reason: region is not pinned");
  if (region.census.d < config.d_lo) return UnpinReason::LowDensity;
  const double floor = config.collectible_floor * static_cast<double>(region.size_bytes);
  if (static_cast<double>(region.census.m_collectible) < floor)
    return UnpinReason::LowCollectibleMass;
  if ((now - region.t_inactive) > config.t_cold_ms) return UnpinReason::WentCold;
  return std::nullopt;
}

bool needs_walk(const Region& region, SimTime now, const PolicyConfig& config) {
  if (region.state != RegionState::Pinned)
    throw UsageError("needs_walk: region is not pinned");
  return (now - region.t_walked) * 4 > config.t_cold_ms;
}

std::vector<PinDecision> on_global_gc_or_cold_full(Heap& heap, UnpinReason reason) {
  if (reason != UnpinReason::GlobalGc && reason != UnpinReason::ColdAreaFull)
    throw UsageError("on_global_gc_or_cold_full: unexpected reason");
  std::vector<PinDecision> decisions;
  for (RegionId id : heap.regions_in_state(RegionState::Pinned)) {
    const Region& r = heap.region(id);
    decisions.push_back({id, pinning_metric(r.mma_r, r.census.d), PinAction::Unpin, reason});
    heap.unpin_region(id);
  }
  return decisions;
}

std::vector<PinDecision> end_of_cycle(Heap& heap, const PolicyConfig& config,
                                      SimTime now, bool allow_pinning) {
  std::vector<PinDecision> decisions;

  for (std::uint32_t id = 0; id < heap.region_count(); ++id) {
    Region& r = heap.region_mut(id);
    r.mma_r = update_mma(r.mma_r, r.r);
    r.sum_r += r.r;
  }

  for (RegionId id : heap.regions_in_state(RegionState::Pinned)) {
    if (needs_walk(heap.region(id), now, config)) heap.walk_region(id, now);
  }

  for (RegionId id : heap.regions_in_state(RegionState::Pinned)) {
    const Region& r = heap.region(id);
    const auto reason = unpin_reason(r, now, config);
    if (!reason) continue;
    if (*reason == UnpinReason::WentCold) continue; // cold collection path
    decisions.push_back({id, pinning_metric(r.mma_r, r.census.d), PinAction::Unpin, reason});
    heap.unpin_region(id);
  }

  if (allow_pinning && config.strategy != PinningStrategy::None) {
    std::vector<RegionId> candidates;
    for (RegionId id : heap.regions_in_state(RegionState::Unpinned)) {
      // Cheap density screen before the census scan.
      if (!(heap.region_density(id) > config.d_hi)) continue;
      heap.refresh_census(id);
      if (is_selectable(heap.region(id), config)) candidates.push_back(id);
    }
    const auto n_pinned =
        static_cast<std::uint32_t>(heap.regions_in_state(RegionState::Pinned).size());
    auto pins = select_to_pin(heap, candidates, n_pinned, config, now);
    decisions.insert(decisions.end(), pins.begin(), pins.end());
  }

  heap.reset_cycle_refcounts();
  return decisions;
}

} // namespace coldsim
