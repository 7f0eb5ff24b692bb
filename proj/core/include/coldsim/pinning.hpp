#ifndef COLDSIM_PINNING_HPP
#define COLDSIM_PINNING_HPP

#include <optional>
#include <vector>

#include "coldsim/heap.hpp"

namespace coldsim {

enum class PinningStrategy : std::uint8_t { None, Selective, Unselective };

const char* to_string(PinningStrategy s);

struct PolicyConfig {
  PinningStrategy strategy = PinningStrategy::None;
  double d_hi = 0.75;
  double d_lo = 0.25;
  std::uint32_t p_max = 256;
  SimTime t_cold_ms = 900'000; // 15 minutes
  double collectible_floor = 0.01; // fraction of region size
  // Selective pinning compares sum(r) against the region size in bytes, as
  // specified; a non-negative value here overrides that threshold.
  double sum_r_floor = -1.0;

  void validate() const; // throws ConfigError
  double sum_r_threshold(std::uint64_t region_size_bytes) const {
    return sum_r_floor >= 0.0 ? sum_r_floor : static_cast<double>(region_size_bytes);
  }
};

enum class PinAction : std::uint8_t { Pin, Unpin, Hold };

enum class UnpinReason : std::uint8_t {
  LowDensity,
  LowCollectibleMass,
  WentCold,
  GlobalGc,
  ColdAreaFull,
};

const char* to_string(PinAction a);
const char* to_string(UnpinReason r);

struct PinDecision {
  RegionId region_id = 0;
  double metric_p = 0.0;
  PinAction action = PinAction::Hold;
  std::optional<UnpinReason> reason; // present exactly when action == Unpin
};

// Modified moving average with smoothing factor 7/8; mma(r_0) = 0.
double update_mma(double prev_mma, std::uint64_t r);

// Region pinning metric P = mma(r) * d.
double pinning_metric(double mma_r, double d);

// An unpinned region qualifies for pinning consideration when its density
// exceeds D_hi and its collectible mass exceeds the floor fraction of the
// region size. The census must be current.
bool is_selectable(const Region& region, const PolicyConfig& config);

// Pins up to (p_max - n_pinned) of the selectable candidates, highest metric
// first. Selective mode additionally requires mma(r) > r > 0 and
// sum(r) above the configured threshold, and pins only candidates whose
// metric exceeds the mean metric of the positive-metric selectable set.
// Pinned regions receive a fresh activity map, pin timestamps, and an
// initial census walk. Candidates not pinned are reported as Hold.
std::vector<PinDecision> select_to_pin(Heap& heap,
                                       const std::vector<RegionId>& candidates,
                                       std::uint32_t n_pinned,
                                       const PolicyConfig& config, SimTime now);

// End-of-cycle unpin test for one pinned region, in rule order: LowDensity,
// then LowCollectibleMass, then WentCold. WentCold regions are left pinned;
// the collector routes them to cold collection.
std::optional<UnpinReason> unpin_reason(const Region& region, SimTime now,
                                        const PolicyConfig& config);

// Pinned regions are re-walked whenever more than T_cold/4 has elapsed
// since the last walk.
bool needs_walk(const Region& region, SimTime now, const PolicyConfig& config);

// Unpins every pinned region (reason GlobalGc or ColdAreaFull).
std::vector<PinDecision> on_global_gc_or_cold_full(Heap& heap, UnpinReason reason);

// The end-of-partial-GC policy step: folds each region's cycle reference
// count into its moving average, walks pinned regions that are due, applies
// the unpin rules, pins new selections (unless suppressed), then resets the
// cycle reference counts.
std::vector<PinDecision> end_of_cycle(Heap& heap, const PolicyConfig& config,
                                      SimTime now, bool allow_pinning);

} // namespace coldsim

#endif // COLDSIM_PINNING_HPP
