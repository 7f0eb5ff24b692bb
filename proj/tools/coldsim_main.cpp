// coldsim: runs one cold-object identification scenario and writes CSV
// reports. Exit codes: 0 success, 1 configuration error, 2 invariant
// violation, 3 I/O error.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coldsim/config.hpp"
#include "coldsim/report.hpp"
#include "coldsim/scenario.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"coldsim: region-heap cold-object identification simulator"};
  app.footer("Config file keys (also usable with --set key=value):\n" +
             coldsim::config_keys_help());

  std::string config_path;
  std::string strategy;
  std::string out_dir;
  std::string record_trace;
  std::string replay_trace;
  std::uint64_t t_cold_ms = 0;
  std::uint64_t sample_interval_ms = 0;
  std::uint64_t p_max = 0;
  std::uint64_t seed = 0;
  bool oracle = false;
  bool quiet = false;
  std::vector<std::string> overrides;

  app.add_option("--config", config_path, "scenario config file (key = value lines)");
  app.add_option("--strategy", strategy, "pinning strategy: none | selective | unselective");
  app.add_option("--t-cold-ms", t_cold_ms, "quiescence threshold in simulated ms");
  app.add_option("--sample-interval-ms", sample_interval_ms, "daemon poll interval");
  app.add_option("--p-max", p_max, "maximum simultaneously pinned regions");
  app.add_option("--seed", seed, "workload RNG seed");
  app.add_flag("--oracle", oracle, "run the access-barrier oracle");
  app.add_option("--out", out_dir, "report output directory");
  app.add_option("--record-trace", record_trace, "record the event trace to a file");
  app.add_option("--replay-trace", replay_trace, "replay a recorded event trace");
  app.add_option("--set", overrides, "extra config overrides, key=value")
      ->take_all();
  app.add_flag("--quiet", quiet, "suppress the run summary on stdout");

  CLI11_PARSE(app, argc, argv);

  coldsim::ScenarioConfig config;
  if (!config_path.empty()) config = coldsim::parse_config_file(config_path);

  // Command-line flags override file values.
  if (!strategy.empty()) coldsim::apply_config_key(config, "strategy", strategy, 0);
  if (app.count("--t-cold-ms")) config.policy.t_cold_ms = t_cold_ms;
  if (app.count("--sample-interval-ms")) config.sampling.poll_interval_ms = sample_interval_ms;
  if (app.count("--p-max")) config.policy.p_max = static_cast<std::uint32_t>(p_max);
  if (app.count("--seed")) config.workload.seed = seed;
  if (app.count("--oracle")) config.oracle_enabled = oracle;
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (!record_trace.empty()) config.record_trace_path = record_trace;
  if (!replay_trace.empty()) config.replay_trace_path = replay_trace;
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw coldsim::ConfigError("--set needs key=value, got '" + kv + "'");
    coldsim::apply_config_key(config, kv.substr(0, eq), kv.substr(eq + 1), 0);
  }
  config.validate();

  const coldsim::RunReport report = coldsim::run_scenario(config);
  coldsim::emit_reports(report, config.output_dir);

  if (!quiet) {
    const coldsim::RunSummary& s = report.summary;
    std::cout << "partial_cycles=" << s.partial_cycles
              << " global_cycles=" << s.global_cycles
              << " cold_objects=" << s.total_cold_objects
              << " cold_bytes=" << s.total_cold_bytes
              << " pinned_mean=" << s.mean_pinned_regions
              << " false_inactivity=" << s.false_inactivity_ratio << '\n';
    std::cout << "reports written to " << config.output_dir << '\n';
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const coldsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const coldsim::UsageError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const coldsim::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
