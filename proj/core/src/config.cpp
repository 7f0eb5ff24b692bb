#include "coldsim/config.hpp"

#include <fstream>
#include <sstream>

namespace coldsim {

void ScenarioConfig::validate() const {
  heap.validate();
  policy.validate();
  gc.validate();
  workload.validate();
  sampling.validate();
  if (output_dir.empty()) throw ConfigError("config: out_dir must not be empty");
}

namespace {

[[noreturn]] void bad(const std::string& what, std::size_t line) {
  if (line > 0)
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
  throw ConfigError("config: " + what);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v, std::size_t line) {
  try {
    std::size_t pos = 0;
    const std::uint64_t out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    bad("key '" + key + "' needs an unsigned integer, got '" + v + "'", line);
  }
}

double parse_double(const std::string& key, const std::string& v, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    bad("key '" + key + "' needs a number, got '" + v + "'", line);
  }
}

bool parse_bool(const std::string& key, const std::string& v, std::size_t line) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  bad("key '" + key + "' needs a boolean, got '" + v + "'", line);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

void apply_config_key(ScenarioConfig& c, const std::string& key,
                      const std::string& value, std::size_t line) {
  // heap
  if (key == "region_size_bytes") c.heap.region_size_bytes = parse_u64(key, value, line);
  else if (key == "region_count") c.heap.region_count = static_cast<std::uint32_t>(parse_u64(key, value, line));
  else if (key == "cold_region_count") c.heap.cold_region_count = static_cast<std::uint32_t>(parse_u64(key, value, line));
  else if (key == "tenure_age") c.heap.tenure_age = static_cast<std::uint32_t>(parse_u64(key, value, line));
  else if (key == "widen_primitive_fields") c.heap.widen_primitive_fields_only = parse_bool(key, value, line);
  // pinning policy
  else if (key == "strategy") {
    if (value == "none") c.policy.strategy = PinningStrategy::None;
    else if (value == "selective") c.policy.strategy = PinningStrategy::Selective;
    else if (value == "unselective") c.policy.strategy = PinningStrategy::Unselective;
    else bad("unknown strategy '" + value + "'", line);
  }
  else if (key == "d_hi") c.policy.d_hi = parse_double(key, value, line);
  else if (key == "d_lo") c.policy.d_lo = parse_double(key, value, line);
  else if (key == "p_max") c.policy.p_max = static_cast<std::uint32_t>(parse_u64(key, value, line));
  else if (key == "t_cold_ms") c.policy.t_cold_ms = parse_u64(key, value, line);
  else if (key == "collectible_floor") c.policy.collectible_floor = parse_double(key, value, line);
  else if (key == "sum_r_floor") c.policy.sum_r_floor = parse_double(key, value, line);
  // gc engine
  else if (key == "cs_cap_fraction") c.gc.cs_cap_fraction = parse_double(key, value, line);
  else if (key == "global_gc_every") c.gc.global_gc_every = static_cast<std::uint32_t>(parse_u64(key, value, line));
  else if (key == "rs_overflow_prob") c.gc.rs_overflow_prob = parse_double(key, value, line);
  // workload
  else if (key == "seed") c.workload.seed = parse_u64(key, value, line);
  else if (key == "duration_ms") c.workload.duration_ms = parse_u64(key, value, line);
  else if (key == "thread_count") c.workload.thread_count = static_cast<std::uint32_t>(parse_u64(key, value, line));
  else if (key == "alloc_rate") c.workload.alloc_rate = parse_double(key, value, line);
  else if (key == "size_min_bytes") c.workload.size_min_bytes = parse_u64(key, value, line);
  else if (key == "size_max_bytes") c.workload.size_max_bytes = parse_u64(key, value, line);
  else if (key == "kind_mix_primitive_array") c.workload.kind_mix_primitive_array = parse_double(key, value, line);
  else if (key == "kind_mix_leaf") c.workload.kind_mix_leaf = parse_double(key, value, line);
  else if (key == "kind_mix_internal") c.workload.kind_mix_internal = parse_double(key, value, line);
  else if (key == "hot_set_size") c.workload.hot_set_size = parse_u64(key, value, line);
  else if (key == "hot_access_rate") c.workload.hot_access_rate = parse_double(key, value, line);
  else if (key == "cold_set_size") c.workload.cold_set_size = parse_u64(key, value, line);
  else if (key == "cold_access_rate") c.workload.cold_access_rate = parse_double(key, value, line);
  else if (key == "call_depth_min") c.workload.call_depth_min = static_cast<std::uint32_t>(parse_u64(key, value, line));
  else if (key == "call_depth_max") c.workload.call_depth_max = static_cast<std::uint32_t>(parse_u64(key, value, line));
  else if (key == "frame_ref_fanout") c.workload.frame_ref_fanout = static_cast<std::uint32_t>(parse_u64(key, value, line));
  else if (key == "frame_surface_fraction") c.workload.frame_surface_fraction = parse_double(key, value, line);
  // sampling
  else if (key == "sample_interval_ms") c.sampling.poll_interval_ms = parse_u64(key, value, line);
  else if (key == "ref_buffer_capacity") c.sampling.ref_buffer_capacity = static_cast<std::uint32_t>(parse_u64(key, value, line));
  else if (key == "trace_capacity") c.sampling.trace_capacity = static_cast<std::uint32_t>(parse_u64(key, value, line));
  // scenario
  else if (key == "oracle") c.oracle_enabled = parse_bool(key, value, line);
  else if (key == "out_dir") c.output_dir = value;
  else if (key == "record_trace") c.record_trace_path = value;
  else if (key == "replay_trace") c.replay_trace_path = value;
  else bad("unknown key '" + key + "'", line);
}

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig config;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    lineno += 1;
    const std::string stripped = trim(raw);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) bad("expected 'key = value'", lineno);
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) bad("empty key", lineno);
    apply_config_key(config, key, value, lineno);
  }
  config.validate();
  return config;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string config_keys_help() {
  return
      "  region_size_bytes        524288     bytes per heap region (multiple of 16)\n"
      "  region_count             256        total regions\n"
      "  cold_region_count        8          regions reserved as the cold area\n"
      "  tenure_age               24         age at which regions become tenured\n"
      "  widen_primitive_fields   false      admit primitive-fields-only objects as collectible\n"
      "  strategy                 none       pinning strategy: none | selective | unselective\n"
      "  d_hi                     0.75       density threshold for pin selection\n"
      "  d_lo                     0.25       density threshold for unpinning\n"
      "  p_max                    256        maximum simultaneously pinned regions\n"
      "  t_cold_ms                900000     quiescence threshold in simulated ms\n"
      "  collectible_floor        0.01       collectible-mass floor as a fraction of region size\n"
      "  sum_r_floor              -1         selective sum(r) threshold; <0 compares against region bytes\n"
      "  cs_cap_fraction          0.25       partial collection-set cap as a fraction of all regions\n"
      "  global_gc_every          32         global GC after this many partial cycles\n"
      "  rs_overflow_prob         0          per-cycle chance a pinned remembered set overflows\n"
      "  seed                     1          workload RNG seed\n"
      "  duration_ms              60000      simulated run length\n"
      "  thread_count             4          mutator threads\n"
      "  alloc_rate               1.0        churn allocations per ms\n"
      "  size_min_bytes           64         smallest object\n"
      "  size_max_bytes           1024       largest object\n"
      "  kind_mix_primitive_array 0.4        fraction of primitive arrays\n"
      "  kind_mix_leaf            0.4        fraction of leaf objects\n"
      "  kind_mix_internal        0.2        fraction of reference-bearing objects\n"
      "  hot_set_size             1000       planted hot objects\n"
      "  hot_access_rate          2.0        hot-set accesses per ms\n"
      "  cold_set_size            1000       planted cold objects\n"
      "  cold_access_rate         0.0        cold-set accesses per ms\n"
      "  call_depth_min           4          stack depth floor\n"
      "  call_depth_max           32         stack depth ceiling\n"
      "  frame_ref_fanout         16         reference slots per frame\n"
      "  frame_surface_fraction   1.0        fraction of accesses visible to the sampler\n"
      "  sample_interval_ms       1          daemon poll interval\n"
      "  ref_buffer_capacity      512        per-thread reference buffer\n"
      "  trace_capacity           128        per-thread frame-trace array length\n"
      "  oracle                   false      run the access-barrier oracle alongside the sampler\n"
      "  out_dir                  out        report directory\n"
      "  record_trace             (unset)    write the event trace to this file\n"
      "  replay_trace             (unset)    drive the run from a recorded trace\n";
}

} // namespace coldsim
