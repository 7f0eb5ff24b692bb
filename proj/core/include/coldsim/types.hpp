#ifndef COLDSIM_TYPES_HPP
#define COLDSIM_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace coldsim {

// Simulated time in milliseconds. The whole simulator runs on one logical
// clock owned by the scenario loop; library code only ever receives `now`.
using SimTime = std::uint64_t;

// Object identifiers are never reused within a run. 0 is reserved (no object).
using ObjectId = std::uint64_t;
inline constexpr ObjectId kNoObject = 0;

using RegionId = std::uint32_t;

// Bitmap granularity: one bit per 16-byte slot, object bit at its base slot.
inline constexpr std::uint64_t kSlotBytes = 16;

// Configuration problems (bad config file, infeasible workload spec). CLI exit 1.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Precondition/invariant violations detected at runtime. CLI exit 2.
class UsageError : public std::logic_error {
public:
  explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

// Filesystem trouble while writing reports or traces. CLI exit 3.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace coldsim

#endif // COLDSIM_TYPES_HPP
