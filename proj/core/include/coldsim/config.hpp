#ifndef COLDSIM_CONFIG_HPP
#define COLDSIM_CONFIG_HPP

#include <string>

#include "coldsim/gc.hpp"
#include "coldsim/heap.hpp"
#include "coldsim/pinning.hpp"
#include "coldsim/sampling.hpp"
#include "coldsim/workload.hpp"

namespace coldsim {

struct ScenarioConfig {
  HeapConfig heap;
  PolicyConfig policy;
  GcConfig gc;
  WorkloadSpec workload;
  SamplingConfig sampling;
  bool oracle_enabled = false;
  std::string output_dir = "out";
  std::string record_trace_path; // empty: no recording
  std::string replay_trace_path; // empty: generate from the workload spec

  void validate() const; // throws ConfigError
};

// Applies one `key = value` assignment. `line` is used in error messages;
// pass 0 for values arriving from the command line.
void apply_config_key(ScenarioConfig& config, const std::string& key,
                      const std::string& value, std::size_t line);

// Parses line-oriented `key = value` text. Blank lines and lines starting
// with '#' are ignored; unknown keys are rejected with their line number.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

// One line per key: name, default, meaning. Embedded in the CLI help text.
std::string config_keys_help();

} // namespace coldsim

#endif // COLDSIM_CONFIG_HPP
