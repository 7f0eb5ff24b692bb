#ifndef COLDSIM_SCENARIO_HPP
#define COLDSIM_SCENARIO_HPP

#include "coldsim/config.hpp"
#include "coldsim/report.hpp"

namespace coldsim {

// Runs one scenario on the simulated clock: workload tick, oracle mirror,
// daemon polls and stack walks, GC cycles on allocation failure (plus
// periodic global cycles), and the end-of-cycle pinning policy. Returns the
// full run report; callers emit CSVs with emit_reports().
RunReport run_scenario(const ScenarioConfig& config);

} // namespace coldsim

#endif // COLDSIM_SCENARIO_HPP
