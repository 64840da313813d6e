#include "swarmnet/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "swarmnet/error.hpp"
#include "swarmnet/hex.hpp"
#include "swarmnet/rng.hpp"

namespace swarmnet {

using nlohmann::json;

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Sense: return "sense";
    case Role::Process: return "process";
    case Role::Control: return "control";
    case Role::Combined: return "combined";
  }
  return "?";
}

Role role_from_string(std::string_view s) {
  if (s == "sense") return Role::Sense;
  if (s == "process") return Role::Process;
  if (s == "control") return Role::Control;
  if (s == "combined") return Role::Combined;
  throw ValidationError("unknown role '" + std::string(s) + "'");
}

std::size_t width_of(VarKind k) {
  switch (k) {
    case VarKind::F32: return 4;
    case VarKind::I16: return 2;
    case VarKind::U8:
    case VarKind::Counter8: return 1;
  }
  return 0;
}

const RxRegion* FirmwareSpec::rx_from(NodeId src) const {
  for (const auto& r : rx)
    if (r.from == src) return &r;
  return nullptr;
}

const TxBinding* FirmwareSpec::tx_to(NodeId dst) const {
  for (const auto& t : tx)
    if (t.to == dst) return &t;
  return nullptr;
}

namespace {

struct Span {
  std::size_t begin;
  std::size_t end;
  std::string what;
};

std::string fw_name(const FirmwareSpec& fw) {
  return "node " + std::to_string(fw.node) + (fw.variant == Variant::Normal ? " (normal)" : " (anomalous)");
}

void check_inside(const FirmwareSpec& fw, std::size_t offset, std::size_t width, const std::string& what) {
  if (width == 0 || offset + width > fw.d)
    throw ValidationError(fw_name(fw) + ": " + what + " [" + std::to_string(offset) + ", " +
                          std::to_string(offset + width) + ") outside data section of " +
                          std::to_string(fw.d) + " bytes");
}

std::size_t rule_width(const DerivedField& f) {
  switch (f.rule) {
    case DerivedRule::Quantize: return f.ranges.size();
    case DerivedRule::PinMask: return 1;
    default: return f.width;
  }
}

std::size_t rule_source_width(const DerivedField& f) {
  switch (f.rule) {
    case DerivedRule::Copy:
    case DerivedRule::Pwm: return f.width;
    case DerivedRule::Quantize: return 4 * f.ranges.size();
    case DerivedRule::PinMask: return f.pins.size();
    case DerivedRule::Duty: return f.slots == 0 ? 0 : f.width / f.slots;
    case DerivedRule::OneHot: return 1;
    case DerivedRule::Random: return 0;
  }
  return 0;
}

}  // namespace

void validate_firmware(const FirmwareSpec& fw) {
  if (fw.d == 0 || fw.d > kSramBytes)
    throw ValidationError(fw_name(fw) + ": data section length " + std::to_string(fw.d) +
                          " not in [1, " + std::to_string(kSramBytes) + "]");
  if (fw.static_region.size() != fw.d)
    throw ValidationError(fw_name(fw) + ": static region has " + std::to_string(fw.static_region.size()) +
                          " bytes, expected " + std::to_string(fw.d));

  std::vector<Span> spans;
  for (const auto& v : fw.vars) {
    check_inside(fw, v.offset, width_of(v.kind), "var field");
    if (v.kind != VarKind::Counter8 && !(v.lo <= v.hi))
      throw ValidationError(fw_name(fw) + ": var field range is empty");
    if (v.step < 0.0 || (v.step > 0.0 && v.kind != VarKind::F32))
      throw ValidationError(fw_name(fw) + ": step applies to f32 fields only and must be >= 0");
    spans.push_back({v.offset, v.offset + width_of(v.kind), "var field"});
  }
  for (const auto& r : fw.rx) {
    check_inside(fw, r.offset, r.width, "rx region");
    spans.push_back({r.offset, r.offset + r.width, "rx region from " + std::to_string(r.from)});
  }
  for (const auto& f : fw.derived) {
    if (f.width != rule_width(f))
      throw ValidationError(fw_name(fw) + ": derived field width " + std::to_string(f.width) +
                            " does not match its rule");
    check_inside(fw, f.offset, f.width, "derived field");
    if (const auto sw = rule_source_width(f); sw > 0) check_inside(fw, f.source, sw, "derived source");
    if (f.rule == DerivedRule::PinMask) {
      if (f.pins.empty() || f.pins.size() > 8) throw ValidationError(fw_name(fw) + ": pin mask needs 1..8 pins");
      for (int p : f.pins)
        if (p < 0 || p > 7) throw ValidationError(fw_name(fw) + ": pin index out of [0, 7]");
    }
    if (f.rule == DerivedRule::Duty && (f.slots == 0 || f.cut == 0 || f.width % f.slots != 0))
      throw ValidationError(fw_name(fw) + ": duty field needs slots > 0, cut > 0 and width a multiple of slots");
    if (f.rule == DerivedRule::OneHot && (f.slots == 0 || f.width % f.slots != 0))
      throw ValidationError(fw_name(fw) + ": one-hot field needs slots > 0 and width a multiple of slots");
    if (f.rule == DerivedRule::Quantize)
      for (const auto& q : f.ranges)
        if (!(q.hi > q.lo)) throw ValidationError(fw_name(fw) + ": quantize range must have hi > lo");
    spans.push_back({f.offset, f.offset + f.width, "derived field"});
  }
  for (const auto& t : fw.tx) check_inside(fw, t.offset, t.width, "tx binding");

  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < spans.size(); ++i)
    if (spans[i].begin < spans[i - 1].end)
      throw ValidationError(fw_name(fw) + ": " + spans[i].what + " at " + std::to_string(spans[i].begin) +
                            " overlaps " + spans[i - 1].what + " ending at " + std::to_string(spans[i - 1].end));

  std::set<NodeId> seen;
  for (const auto& r : fw.rx)
    if (!seen.insert(r.from).second)
      throw ValidationError(fw_name(fw) + ": two rx regions for sender " + std::to_string(r.from));
  seen.clear();
  for (const auto& t : fw.tx)
    if (!seen.insert(t.to).second)
      throw ValidationError(fw_name(fw) + ": two tx bindings for receiver " + std::to_string(t.to));
}

SwarmGraph::SwarmGraph(std::string name, std::uint16_t wire_id, std::vector<SwarmNode> nodes,
                       std::vector<Edge> edges)
    : name_(std::move(name)), wire_id_(wire_id), nodes_(std::move(nodes)), edges_(std::move(edges)) {
  const std::size_t n = nodes_.size();
  adjacency_.assign(n * n, 0);
  for (const auto& e : edges_) adjacency_[e.src * n + e.dst] = 1;

  // Kahn's algorithm; the ready set is ordered by (role, id). Nodes on a
  // cycle are appended in the same order and read last tick's payloads.
  auto rank = [&](NodeId id) { return std::pair{static_cast<int>(nodes_[id].role), id}; };
  std::vector<std::size_t> indeg(n, 0);
  for (const auto& e : edges_) ++indeg[e.dst];
  std::set<std::pair<int, NodeId>> ready;
  for (NodeId i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.insert(rank(i));
  std::vector<bool> placed(n, false);
  while (order_.size() < n) {
    if (ready.empty()) {
      std::pair<int, NodeId> best{99, 0};
      for (NodeId i = 0; i < n; ++i)
        if (!placed[i]) best = std::min(best, rank(i));
      ready.insert(best);
    }
    const NodeId v = ready.begin()->second;
    ready.erase(ready.begin());
    if (placed[v]) continue;
    placed[v] = true;
    order_.push_back(v);
    for (NodeId w = 0; w < n; ++w)
      if (adjacency_[v * n + w] && !placed[w] && --indeg[w] == 0) ready.insert(rank(w));
  }
}

std::vector<NodeId> SwarmGraph::in_neighbors(NodeId dst) const {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < size(); ++i)
    if (has_edge(i, dst)) out.push_back(i);
  return out;
}

std::size_t SwarmGraph::max_d() const {
  std::size_t d = 0;
  for (const auto& node : nodes_) d = std::max({d, node.normal.d, node.anomalous.d});
  return d;
}

std::size_t SwarmGraph::max_normal_d() const {
  std::size_t d = 0;
  for (const auto& node : nodes_) d = std::max(d, node.normal.d);
  return d;
}

SwarmGraph build_swarm(std::string name, std::uint16_t wire_id, std::vector<SwarmNode> nodes,
                       std::vector<Edge> edges) {
  const std::size_t n = nodes.size();
  if (n == 0) throw ValidationError("swarm has no nodes");
  std::set<NodeId> ids;
  for (const auto& node : nodes)
    if (!ids.insert(node.id).second) throw ValidationError("duplicate node id " + std::to_string(node.id));
  for (std::size_t i = 0; i < n; ++i)
    if (nodes[i].id != i)
      throw ValidationError("node ids must be 0.." + std::to_string(n - 1) + " in order; found " +
                            std::to_string(nodes[i].id) + " at position " + std::to_string(i));

  std::set<std::pair<NodeId, NodeId>> seen;
  for (const auto& e : edges) {
    if (e.src >= n || e.dst >= n)
      throw ValidationError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                            " references an unknown node");
    if (e.src == e.dst) throw ValidationError("self-loop on node " + std::to_string(e.src));
    if (!seen.insert({e.src, e.dst}).second)
      throw ValidationError("duplicate edge " + std::to_string(e.src) + "->" + std::to_string(e.dst));
  }

  for (const auto& node : nodes) {
    for (const FirmwareSpec* fw : {&node.normal, &node.anomalous}) {
      if (fw->node != node.id) throw ValidationError("firmware node id does not match its node");
      validate_firmware(*fw);
      for (const auto& t : fw->tx)
        if (!seen.contains({node.id, t.to}))
          throw ValidationError("node " + std::to_string(node.id) + " sends to " + std::to_string(t.to) +
                                " without an edge");
      for (const auto& r : fw->rx)
        if (!seen.contains({r.from, node.id}))
          throw ValidationError("node " + std::to_string(node.id) + " receives from " + std::to_string(r.from) +
                                " without an edge");
    }
  }
  for (const auto& e : edges) {
    const auto* tx = nodes[e.src].normal.tx_to(e.dst);
    if (tx == nullptr)
      throw ValidationError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                            " has no tx binding in the sender's normal firmware");
    for (const FirmwareSpec* fw : {&nodes[e.dst].normal, &nodes[e.dst].anomalous}) {
      const auto* rx = fw->rx_from(e.src);
      if (rx == nullptr || rx->width != tx->width)
        throw ValidationError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                              " needs an rx region of width " + std::to_string(tx->width) + " at the receiver");
    }
    if (const auto* atx = nodes[e.src].anomalous.tx_to(e.dst); atx && atx->width != tx->width)
      throw ValidationError("anomalous tx width differs on edge " + std::to_string(e.src) + "->" +
                            std::to_string(e.dst));
  }
  return SwarmGraph(std::move(name), wire_id, std::move(nodes), std::move(edges));
}

std::vector<std::uint8_t> make_static_region(std::size_t d, std::uint64_t build_seed, double density) {
  Rng rng(build_seed);
  std::vector<std::uint8_t> out(d, 0);
  for (auto& b : out)
    if (rng.uniform01() < density) b = static_cast<std::uint8_t>(1 + rng.below(255));
  return out;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

constexpr std::size_t kSyncFrame = 2;
constexpr std::size_t kSyncSlots = 4;
constexpr std::size_t kSyncSlotBytes = 8;

class FirmwareBuilder {
 public:
  FirmwareBuilder(std::string_view swarm, NodeId node, Variant variant, std::size_t d) {
    fw_.node = node;
    fw_.variant = variant;
    fw_.d = d;
    const std::string key = std::string(swarm) + "/" + std::to_string(node);
    fw_.static_region = make_static_region(d, hash_label(key + "/n"), kStaticDensity);
    if (variant == Variant::Anomalous) {
      Rng rng(hash_label(key + "/a"));
      for (auto& b : fw_.static_region)
        if (rng.uniform01() < kRebuiltFraction)
          b = rng.uniform01() < kStaticDensity ? static_cast<std::uint8_t>(1 + rng.below(255)) : 0;
    }
  }

  FirmwareBuilder& var(std::size_t offset, VarKind kind, double lo = 0, double hi = 0) {
    fw_.vars.push_back({offset, kind, lo, hi});
    return *this;
  }
  FirmwareBuilder& floats(std::size_t offset, const std::vector<QuantRange>& ranges) {
    for (std::size_t k = 0; k < ranges.size(); ++k) {
      var(offset + 4 * k, VarKind::F32, ranges[k].lo, ranges[k].hi);
      fw_.vars.back().step = resolution(ranges[k]);
    }
    return *this;
  }
  FirmwareBuilder& rx(NodeId from, std::size_t offset, std::size_t width) {
    fw_.rx.push_back({from, offset, width});
    return *this;
  }
  FirmwareBuilder& copy(std::size_t offset, std::size_t source, std::size_t width) {
    DerivedField f;
    f.offset = offset;
    f.width = width;
    f.rule = DerivedRule::Copy;
    f.source = source;
    fw_.derived.push_back(f);
    return *this;
  }
  FirmwareBuilder& quantize(std::size_t offset, std::size_t source, const std::vector<QuantRange>& ranges,
                            double gain) {
    DerivedField f;
    f.offset = offset;
    f.width = ranges.size();
    f.rule = DerivedRule::Quantize;
    f.source = source;
    f.ranges = ranges;
    f.gain = gain;
    fw_.derived.push_back(f);
    return *this;
  }
  FirmwareBuilder& random(std::size_t offset, std::size_t width) {
    DerivedField f;
    f.offset = offset;
    f.width = width;
    f.rule = DerivedRule::Random;
    fw_.derived.push_back(f);
    return *this;
  }
  FirmwareBuilder& pwm(std::size_t offset, std::size_t source, std::size_t width, double gain) {
    DerivedField f;
    f.offset = offset;
    f.width = width;
    f.rule = DerivedRule::Pwm;
    f.source = source;
    f.gain = gain;
    fw_.derived.push_back(f);
    return *this;
  }
  FirmwareBuilder& pins(std::size_t offset, std::size_t source, std::vector<int> pins, std::uint8_t cut) {
    DerivedField f;
    f.offset = offset;
    f.width = 1;
    f.rule = DerivedRule::PinMask;
    f.source = source;
    f.pins = std::move(pins);
    f.cut = cut;
    fw_.derived.push_back(f);
    return *this;
  }
  // Overdrive flag per channel: 0xff when a level leaves the 7-bit range.
  FirmwareBuilder& clip(std::size_t offset, std::size_t source, std::size_t channels) {
    DerivedField f;
    f.offset = offset;
    f.width = channels;
    f.rule = DerivedRule::Duty;
    f.source = source;
    f.slots = 1;
    f.cut = 128;
    fw_.derived.push_back(f);
    return *this;
  }
  // Network stack globals shared by every build: the (counter, slot) sync
  // frame at 0..1 and the slot table after it.
  FirmwareBuilder& sync_stack(bool coordinator) {
    if (coordinator) var(0, VarKind::Counter8).var(1, VarKind::U8, 0, kSyncSlots - 1);
    else rx(0, 0, kSyncFrame);
    DerivedField f;
    f.offset = kSyncFrame;
    f.width = kSyncSlots * kSyncSlotBytes;
    f.rule = DerivedRule::OneHot;
    f.source = 1;
    f.slots = kSyncSlots;
    fw_.derived.push_back(f);
    return *this;
  }
  FirmwareBuilder& tx(NodeId to, std::size_t offset, std::size_t width) {
    fw_.tx.push_back({to, offset, width});
    return *this;
  }

  FirmwareSpec build() { return std::move(fw_); }

 private:
  // Largest power of two giving at least 64 steps across the range.
  static double resolution(const QuantRange& r) {
    return std::exp2(std::floor(std::log2((r.hi - r.lo) / 64.0)));
  }

  static constexpr double kStaticDensity = 0.15;
  static constexpr double kRebuiltFraction = 0.3;
  FirmwareSpec fw_;
};

std::vector<QuantRange> widen(const std::vector<QuantRange>& ranges) {
  std::vector<QuantRange> out;
  for (const auto& r : ranges) {
    const double w = r.hi - r.lo;
    out.push_back({r.lo - w, r.hi + w});
  }
  return out;
}

constexpr double kSignalGain = 128.0;
constexpr double kPwmGain = 2.0;
constexpr std::uint8_t kLedCut = 64;

std::vector<int> iota_pins(int first, int count) {
  std::vector<int> p;
  for (int i = 0; i < count; ++i) p.push_back(first + i);
  return p;
}

// Broadcaster: coordinates the swarm, sending its sync frame to every other
// node.
SwarmNode broadcaster(std::string_view swarm, std::size_t n, std::size_t d_norm, std::size_t d_anom,
                      std::size_t extra_ints) {
  FirmwareBuilder normal(swarm, 0, Variant::Normal, d_norm);
  normal.sync_stack(true).copy(40, 0, kSyncFrame);
  FirmwareBuilder anom(swarm, 0, Variant::Anomalous, d_anom);
  anom.sync_stack(true).copy(44, 0, kSyncFrame);
  for (NodeId j = 1; j < n; ++j) {
    normal.tx(j, 40, kSyncFrame);
    anom.tx(j, 44, kSyncFrame);
  }
  for (std::size_t k = 0; k < extra_ints; ++k) anom.var(60 + 2 * k, VarKind::I16, -32768, 32767);
  return {0, Role::Control, normal.build(), anom.build()};
}

// Sensor: floats in per-channel ranges, copied into a tx buffer for `to`.
SwarmNode sensor(std::string_view swarm, NodeId id, NodeId to, const std::vector<QuantRange>& ranges,
                 std::size_t d_norm, std::size_t d_anom, bool anomalous_sends, bool anomalous_widens) {
  const std::size_t w = 4 * ranges.size();
  FirmwareBuilder normal(swarm, id, Variant::Normal, d_norm);
  normal.sync_stack(false).floats(64, ranges).copy(120, 64, w).tx(to, 120, w);
  FirmwareBuilder anom(swarm, id, Variant::Anomalous, d_anom);
  anom.sync_stack(false).floats(60, anomalous_widens ? widen(ranges) : ranges).copy(110, 60, w);
  if (anomalous_sends) anom.tx(to, 110, w);
  return {id, Role::Sense, normal.build(), anom.build()};
}

// Processor: quantizes received floats into a signal and forwards it.
SwarmNode processor(std::string_view swarm, NodeId id, NodeId from, NodeId to, const std::vector<QuantRange>& ranges,
                    std::size_t d_norm, std::size_t d_anom) {
  const std::size_t w = 4 * ranges.size();
  const std::size_t s = ranges.size();
  FirmwareBuilder normal(swarm, id, Variant::Normal, d_norm);
  normal.sync_stack(false).rx(from, 80, w).quantize(140, 80, ranges, kSignalGain).copy(150, 140, s).tx(
      to, 150, s);
  FirmwareBuilder anom(swarm, id, Variant::Anomalous, d_anom);
  anom.sync_stack(false).rx(from, 70, w).random(120, s).copy(130, 120, s).tx(to, 130, s);
  return {id, Role::Process, normal.build(), anom.build()};
}

// Controller: drives LEDs from a received signal.
SwarmNode controller(std::string_view swarm, NodeId id, NodeId from, std::size_t leds, std::size_t d_norm,
                     std::size_t d_anom) {
  FirmwareBuilder normal(swarm, id, Variant::Normal, d_norm);
  normal.sync_stack(false).rx(from, 60, leds).pwm(90, 60, leds, kPwmGain);
  normal.pins(100, 60, iota_pins(0, int(leds)), kLedCut).clip(110, 60, leds);
  FirmwareBuilder anom(swarm, id, Variant::Anomalous, d_anom);
  anom.sync_stack(false).rx(from, 56, leds).random(80, leds).pwm(90, 80, leds, kPwmGain);
  anom.pins(100, 80, iota_pins(0, int(leds)), kLedCut).clip(110, 80, leds);
  return {id, Role::Control, normal.build(), anom.build()};
}

// Process-and-control node: quantizes received floats and drives LEDs on
// `pins`; the anomalous build drives a different set of pins.
SwarmNode process_control(std::string_view swarm, NodeId id, NodeId from, const std::vector<QuantRange>& ranges,
                          std::size_t d_norm, std::size_t d_anom) {
  const std::size_t w = 4 * ranges.size();
  const std::size_t s = ranges.size();
  FirmwareBuilder normal(swarm, id, Variant::Normal, d_norm);
  normal.sync_stack(false).rx(from, 80, w).quantize(140, 80, ranges, kSignalGain);
  normal.pwm(150, 140, s, kPwmGain).pins(160, 140, iota_pins(2, int(s)), kLedCut).clip(170, 140, s);
  FirmwareBuilder anom(swarm, id, Variant::Anomalous, d_anom);
  anom.sync_stack(false).rx(from, 80, w).quantize(140, 80, ranges, kSignalGain);
  anom.pwm(150, 140, s, kPwmGain).pins(160, 140, iota_pins(5, int(s)), kLedCut).clip(170, 140, s);
  return {id, Role::Combined, normal.build(), anom.build()};
}

SwarmGraph make_swarm1() {
  const std::vector<QuantRange> ranges = {{18.0, 30.0},  {35.0, 65.0}, {990.0, 1030.0},
                                          {150.0, 750.0}, {3.1, 3.5},   {20.0, 180.0}};
  std::vector<SwarmNode> nodes;
  nodes.push_back(broadcaster("swarm1", 4, 191, 195, 3));
  nodes.push_back(sensor("swarm1", 1, 2, ranges, 450, 438, true, true));
  nodes.push_back(processor("swarm1", 2, 1, 3, ranges, 516, 414));
  nodes.push_back(controller("swarm1", 3, 2, 6, 406, 386));
  std::vector<Edge> edges = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {2, 3}};
  return build_swarm("swarm1", 1, std::move(nodes), std::move(edges));
}

SwarmGraph make_swarm2() {
  const std::vector<QuantRange> branch1 = {{20.0, 28.0}, {40.0, 60.0}, {1000.0, 1020.0}, {200.0, 600.0}};
  const std::vector<QuantRange> branch2 = {{0.5, 2.5}, {12.0, 16.0}, {45.0, 55.0}};
  std::vector<SwarmNode> nodes;
  nodes.push_back(broadcaster("swarm2", 6, 195, 199, 2));
  nodes.push_back(sensor("swarm2", 1, 2, branch1, 438, 430, true, true));
  nodes.push_back(processor("swarm2", 2, 1, 3, branch1, 490, 414));
  nodes.push_back(controller("swarm2", 3, 2, 4, 394, 386));
  nodes.push_back(sensor("swarm2", 4, 5, branch2, 430, 372, false, false));
  nodes.push_back(process_control("swarm2", 5, 4, branch2, 446, 452));
  std::vector<Edge> edges = {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {1, 2}, {2, 3}, {4, 5}};
  return build_swarm("swarm2", 2, std::move(nodes), std::move(edges));
}

}  // namespace

SwarmGraph preset_swarm(std::string_view name) {
  if (name == "swarm1") return make_swarm1();
  if (name == "swarm2") return make_swarm2();
  throw ValidationError("unknown swarm preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() { return {"swarm1", "swarm2"}; }

// ---------------------------------------------------------------------------
// Config files

namespace {

VarKind var_kind_from(const std::string& s) {
  if (s == "f32") return VarKind::F32;
  if (s == "u8") return VarKind::U8;
  if (s == "i16") return VarKind::I16;
  if (s == "counter8") return VarKind::Counter8;
  throw ValidationError("unknown var kind '" + s + "'");
}

std::string to_string(VarKind k) {
  switch (k) {
    case VarKind::F32: return "f32";
    case VarKind::U8: return "u8";
    case VarKind::I16: return "i16";
    case VarKind::Counter8: return "counter8";
  }
  return "?";
}

DerivedRule rule_from(const std::string& s) {
  if (s == "copy") return DerivedRule::Copy;
  if (s == "quantize") return DerivedRule::Quantize;
  if (s == "random") return DerivedRule::Random;
  if (s == "pwm") return DerivedRule::Pwm;
  if (s == "pinmask") return DerivedRule::PinMask;
  if (s == "duty") return DerivedRule::Duty;
  if (s == "onehot") return DerivedRule::OneHot;
  throw ValidationError("unknown derived rule '" + s + "'");
}

std::string to_string(DerivedRule r) {
  switch (r) {
    case DerivedRule::Copy: return "copy";
    case DerivedRule::Quantize: return "quantize";
    case DerivedRule::Random: return "random";
    case DerivedRule::Pwm: return "pwm";
    case DerivedRule::PinMask: return "pinmask";
    case DerivedRule::Duty: return "duty";
    case DerivedRule::OneHot: return "onehot";
  }
  return "?";
}

FirmwareSpec firmware_from_json(const json& j, NodeId node, Variant variant, const std::string& swarm) {
  FirmwareSpec fw;
  fw.node = node;
  fw.variant = variant;
  fw.d = j.at("d").get<std::size_t>();
  if (j.contains("static_hex")) {
    fw.static_region = hex_decode(j.at("static_hex").get<std::string>());
  } else {
    const auto& s = j.value("static", json::object());
    const std::string key = swarm + "/" + std::to_string(node) + (variant == Variant::Normal ? "/n" : "/a");
    const auto seed = s.contains("seed") ? s.at("seed").get<std::uint64_t>() : hash_label(key);
    fw.static_region = make_static_region(fw.d, seed, s.value("density", 0.35));
  }
  for (const auto& v : j.value("vars", json::array()))
    fw.vars.push_back({v.at("offset").get<std::size_t>(), var_kind_from(v.at("kind").get<std::string>()),
                       v.value("lo", 0.0), v.value("hi", 0.0), v.value("step", 0.0)});
  for (const auto& r : j.value("rx", json::array()))
    fw.rx.push_back({r.at("from").get<NodeId>(), r.at("offset").get<std::size_t>(), r.at("width").get<std::size_t>()});
  for (const auto& f : j.value("derived", json::array())) {
    DerivedField d;
    d.offset = f.at("offset").get<std::size_t>();
    d.rule = rule_from(f.at("rule").get<std::string>());
    d.source = f.value("source", std::size_t{0});
    d.gain = f.value("gain", 1.0);
    d.cut = f.value("cut", std::uint8_t{0});
    d.pins = f.value("pins", std::vector<int>{});
    d.slots = f.value("slots", std::size_t{0});
    for (const auto& q : f.value("ranges", json::array())) d.ranges.push_back({q.at(0).get<double>(), q.at(1).get<double>()});
    if (d.rule == DerivedRule::Quantize) d.width = d.ranges.size();
    else if (d.rule == DerivedRule::PinMask) d.width = 1;
    else if (d.rule == DerivedRule::Duty) d.width = f.at("channels").get<std::size_t>() * d.slots;
    else d.width = f.at("width").get<std::size_t>();
    fw.derived.push_back(std::move(d));
  }
  for (const auto& t : j.value("tx", json::array()))
    fw.tx.push_back({t.at("to").get<NodeId>(), t.at("offset").get<std::size_t>(), t.at("width").get<std::size_t>()});
  return fw;
}

json firmware_to_json(const FirmwareSpec& fw) {
  json j;
  j["d"] = fw.d;
  j["static_hex"] = hex_encode(fw.static_region);
  json vars = json::array();
  for (const auto& v : fw.vars) {
    json o = {{"offset", v.offset}, {"kind", to_string(v.kind)}};
    if (v.kind != VarKind::Counter8) {
      o["lo"] = v.lo;
      o["hi"] = v.hi;
      if (v.step > 0.0) o["step"] = v.step;
    }
    vars.push_back(o);
  }
  j["vars"] = vars;
  json rx = json::array();
  for (const auto& r : fw.rx) rx.push_back({{"from", r.from}, {"offset", r.offset}, {"width", r.width}});
  j["rx"] = rx;
  json derived = json::array();
  for (const auto& f : fw.derived) {
    json o = {{"offset", f.offset}, {"rule", to_string(f.rule)}};
    switch (f.rule) {
      case DerivedRule::Copy: o["source"] = f.source; o["width"] = f.width; break;
      case DerivedRule::Random: o["width"] = f.width; break;
      case DerivedRule::Pwm: o["source"] = f.source; o["width"] = f.width; o["gain"] = f.gain; break;
      case DerivedRule::Quantize: {
        o["source"] = f.source;
        o["gain"] = f.gain;
        json ranges = json::array();
        for (const auto& q : f.ranges) ranges.push_back({q.lo, q.hi});
        o["ranges"] = ranges;
        break;
      }
      case DerivedRule::PinMask: o["source"] = f.source; o["pins"] = f.pins; o["cut"] = f.cut; break;
      case DerivedRule::Duty:
        o["source"] = f.source;
        o["channels"] = f.slots == 0 ? 0 : f.width / f.slots;
        o["slots"] = f.slots;
        o["cut"] = f.cut;
        break;
      case DerivedRule::OneHot: o["source"] = f.source; o["width"] = f.width; o["slots"] = f.slots; break;
    }
    derived.push_back(o);
  }
  j["derived"] = derived;
  json tx = json::array();
  for (const auto& t : fw.tx) tx.push_back({{"to", t.to}, {"offset", t.offset}, {"width", t.width}});
  j["tx"] = tx;
  return j;
}

}  // namespace

SwarmGraph parse_swarm_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("swarm config: ") + e.what());
  }
  try {
    const auto name = doc.at("name").get<std::string>();
    const auto wire_id = doc.value("wire_id", std::uint16_t{0});
    std::vector<SwarmNode> nodes;
    for (const auto& jn : doc.at("nodes")) {
      SwarmNode node;
      node.id = jn.at("id").get<NodeId>();
      node.role = role_from_string(jn.at("role").get<std::string>());
      node.normal = firmware_from_json(jn.at("normal"), node.id, Variant::Normal, name);
      node.anomalous = firmware_from_json(jn.contains("anomalous") ? jn.at("anomalous") : jn.at("normal"), node.id,
                                          Variant::Anomalous, name);
      nodes.push_back(std::move(node));
    }
    std::vector<Edge> edges;
    for (const auto& je : doc.at("edges")) edges.push_back({je.at(0).get<NodeId>(), je.at(1).get<NodeId>()});
    return build_swarm(name, wire_id, std::move(nodes), std::move(edges));
  } catch (const json::exception& e) {
    throw FormatError(std::string("swarm config: ") + e.what());
  }
}

SwarmGraph load_swarm_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open swarm config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_swarm_config(ss.str());
}

std::string dump_swarm_config(const SwarmGraph& swarm) {
  json doc;
  doc["name"] = swarm.name();
  doc["wire_id"] = swarm.wire_id();
  json nodes = json::array();
  for (const auto& node : swarm.nodes()) {
    nodes.push_back({{"id", node.id},
                     {"role", std::string(to_string(node.role))},
                     {"normal", firmware_to_json(node.normal)},
                     {"anomalous", firmware_to_json(node.anomalous)}});
  }
  doc["nodes"] = nodes;
  json edges = json::array();
  for (const auto& e : swarm.edges()) edges.push_back({e.src, e.dst});
  doc["edges"] = edges;
  return doc.dump(2);
}

SwarmGraph resolve_swarm(std::string_view name_or_path) {
  for (const auto& p : preset_names())
    if (p == name_or_path) return preset_swarm(p);
  const std::filesystem::path path(name_or_path);
  if (std::filesystem::exists(path)) return load_swarm_config(path);
  throw ValidationError("'" + std::string(name_or_path) + "' is neither a swarm preset nor a config file");
}

}  // namespace swarmnet
