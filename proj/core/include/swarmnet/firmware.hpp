#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "swarmnet/rng.hpp"
#include "swarmnet/swarm.hpp"

namespace swarmnet {

/// One node's SRAM data section at one tick.
struct DataSectionTrace {
  NodeId node = 0;
  std::int64_t tick = 0;
  std::vector<std::uint8_t> bytes;

  friend bool operator==(const DataSectionTrace&, const DataSectionTrace&) = default;
};

/// Per-sender payload delivered this tick. A sender that is absent from the
/// map, or mapped to nullopt, delivered nothing and the receiver keeps the
/// bytes it already holds in that rx region.
using Inbox = std::map<NodeId, std::optional<std::vector<std::uint8_t>>>;
using Outbox = std::map<NodeId, std::vector<std::uint8_t>>;

/// Memory carried between ticks: the previous data section image plus
/// counter values. Starts as the static region with zeroed dynamic regions.
struct FirmwareState {
  std::vector<std::uint8_t> memory;
  std::vector<std::uint8_t> counters;  // one per Counter8 var, in declaration order
  bool initialised = false;
};

/// Sampling modifiers for physical-twin devices. `jitter` shifts each float
/// channel's sampling window by a per-device fraction of its width while
/// keeping it inside the declared range.
struct DeviceProfile {
  std::vector<double> float_shift;  // per F32 var, in [-1, 1]
  double jitter = 0.0;
};

struct StepResult {
  DataSectionTrace trace;
  Outbox outbox;
};

/// Runs one tick of a firmware build.
///
/// Writes, in order: static bytes (first tick only), sampled vars, inbound
/// payloads, derived fields in declaration order; then reads each tx binding
/// out of the finished image. Throws ValidationError when a payload width
/// does not match its rx region.
StepResult step_firmware(const FirmwareSpec& spec, FirmwareState& state, const Inbox& inbox, Rng& rng,
                         std::int64_t tick, const DeviceProfile& profile = {});

/// Little-endian IEEE-754 binary32 helpers used by the firmware model.
void store_f32(std::uint8_t* dst, float value);
float load_f32(const std::uint8_t* src);

/// F32 reading snapped down to a multiple of step, never below the first multiple >= lo.
double snap_reading(double value, double lo, double step);

/// Level byte produced by the quantize rule: floor((f - lo) / (hi - lo) * gain)
/// truncated to 8 bits, with no clamping, so readings outside [lo, hi) wrap.
std::uint8_t quantize_level(float f, const QuantRange& range, double gain);

}  // namespace swarmnet
