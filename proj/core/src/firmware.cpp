#include "swarmnet/firmware.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "swarmnet/error.hpp"

namespace swarmnet {

void store_f32(std::uint8_t* dst, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) dst[i] = static_cast<std::uint8_t>(bits >> (8 * i));
}

float load_f32(const std::uint8_t* src) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(src[i]) << (8 * i);
  return std::bit_cast<float>(bits);
}

double snap_reading(double value, double lo, double step) {
  if (step <= 0.0) return value;
  return std::max(std::floor(value / step), std::ceil(lo / step)) * step;
}

std::uint8_t quantize_level(float f, const QuantRange& range, double gain) {
  double level = std::floor((static_cast<double>(f) - range.lo) / (range.hi - range.lo) * gain);
  if (!std::isfinite(level)) level = 0.0;
  level = std::clamp(level, -1e15, 1e15);
  return static_cast<std::uint8_t>(static_cast<std::int64_t>(level));
}

StepResult step_firmware(const FirmwareSpec& spec, FirmwareState& state, const Inbox& inbox, Rng& rng,
                         std::int64_t tick, const DeviceProfile& profile) {
  if (!state.initialised) {
    state.memory = spec.static_region;
    for (const auto& r : spec.rx) std::fill_n(state.memory.begin() + r.offset, r.width, 0);
    state.counters.clear();
    for (const auto& v : spec.vars)
      if (v.kind == VarKind::Counter8) state.counters.push_back(rng.byte());
    state.initialised = true;
  }
  auto& mem = state.memory;

  std::size_t counter_idx = 0;
  std::size_t float_idx = 0;
  for (const auto& v : spec.vars) {
    std::uint8_t* at = mem.data() + v.offset;
    switch (v.kind) {
      case VarKind::F32: {
        double lo = v.lo;
        double hi = v.hi;
        if (profile.jitter > 0.0 && float_idx < profile.float_shift.size()) {
          const double w = hi - lo;
          const double narrowed = w * (1.0 - profile.jitter);
          lo += (w - narrowed) * (profile.float_shift[float_idx] + 1.0) / 2.0;
          hi = lo + narrowed;
        }
        ++float_idx;
        store_f32(at, static_cast<float>(snap_reading(rng.uniform(lo, hi), lo, v.step)));
        break;
      }
      case VarKind::U8:
        *at = static_cast<std::uint8_t>(rng.range(static_cast<std::int64_t>(v.lo), static_cast<std::int64_t>(v.hi)));
        break;
      case VarKind::I16: {
        const auto x = static_cast<std::uint16_t>(
            static_cast<std::int16_t>(rng.range(static_cast<std::int64_t>(v.lo), static_cast<std::int64_t>(v.hi))));
        at[0] = static_cast<std::uint8_t>(x & 0xff);
        at[1] = static_cast<std::uint8_t>(x >> 8);
        break;
      }
      case VarKind::Counter8:
        *at = static_cast<std::uint8_t>(state.counters[counter_idx++] + static_cast<std::uint64_t>(tick));
        break;
    }
  }

  for (const auto& r : spec.rx) {
    const auto it = inbox.find(r.from);
    if (it == inbox.end() || !it->second) continue;
    const auto& payload = *it->second;
    if (payload.size() != r.width)
      throw ValidationError("node " + std::to_string(spec.node) + ": payload of " + std::to_string(payload.size()) +
                            " bytes from node " + std::to_string(r.from) + " does not fit rx region of " +
                            std::to_string(r.width));
    std::copy(payload.begin(), payload.end(), mem.begin() + r.offset);
  }

  for (const auto& f : spec.derived) {
    std::uint8_t* out = mem.data() + f.offset;
    const std::uint8_t* src = mem.data() + f.source;
    switch (f.rule) {
      case DerivedRule::Copy: std::memmove(out, src, f.width); break;
      case DerivedRule::Random: rng.fill({out, f.width}); break;
      case DerivedRule::Quantize:
        for (std::size_t k = 0; k < f.ranges.size(); ++k) out[k] = quantize_level(load_f32(src + 4 * k), f.ranges[k], f.gain);
        break;
      case DerivedRule::Pwm:
        for (std::size_t k = 0; k < f.width; ++k)
          out[k] = static_cast<std::uint8_t>(static_cast<std::int64_t>(std::floor(src[k] * f.gain)));
        break;
      case DerivedRule::PinMask: {
        std::uint8_t mask = 0;
        for (std::size_t k = 0; k < f.pins.size(); ++k)
          if (src[k] >= f.cut) mask |= static_cast<std::uint8_t>(1u << f.pins[k]);
        *out = mask;
        break;
      }
      case DerivedRule::Duty:
        for (std::size_t k = 0; k < f.width; ++k)
          out[k] = src[k / f.slots] >= (k % f.slots + 1) * std::size_t{f.cut} ? 0xff : 0x00;
        break;
      case DerivedRule::OneHot: {
        const std::size_t group = f.width / f.slots;
        const std::size_t hot = *src % f.slots;
        for (std::size_t k = 0; k < f.width; ++k) out[k] = k / group == hot ? 0xff : 0x00;
        break;
      }
    }
  }

  StepResult result;
  result.trace = {spec.node, tick, mem};
  for (const auto& t : spec.tx)
    result.outbox[t.to] = std::vector<std::uint8_t>(mem.begin() + t.offset, mem.begin() + t.offset + t.width);
  return result;
}

}  // namespace swarmnet
