#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace swarmnet {

using NodeId = std::uint16_t;

/// Largest data section a node may report; the modeled devices carry 2 KB of SRAM.
inline constexpr std::size_t kSramBytes = 2048;

enum class Role { Sense, Process, Control, Combined };
enum class Variant { Normal, Anomalous };

std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

/// Runtime variable sampled fresh every tick.
enum class VarKind {
  F32,       ///< 4-byte little-endian float, uniform in [lo, hi]
  U8,        ///< 1 byte, uniform integer in [lo, hi]
  I16,       ///< 2-byte little-endian signed integer, uniform in [lo, hi]
  Counter8,  ///< 1 byte incremented every tick from a seeded start value
};

std::size_t width_of(VarKind k);

struct VarField {
  std::size_t offset = 0;
  VarKind kind = VarKind::U8;
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;  ///< F32 only: sensor resolution; readings snap down to a multiple of step, 0 = none
};

/// Receive buffer for one inbound edge.
struct RxRegion {
  NodeId from = 0;
  std::size_t offset = 0;
  std::size_t width = 0;
};

/// How a derived region is computed from bytes already written this tick.
enum class DerivedRule {
  Copy,      ///< copy `width` bytes from `source`
  Quantize,  ///< floats at `source` -> one level byte each: uint8(floor((f-lo)/(hi-lo) * gain))
  Random,    ///< uniform random bytes
  Pwm,       ///< bytes at `source` -> uint8(b * gain)
  PinMask,   ///< one byte; bit pins[k] set iff source byte k >= cut
  Duty,      ///< `slots` bytes per source byte k; slot s is 0xff iff byte k >= (s + 1) * cut
  OneHot,    ///< `slots` groups of width / slots bytes; group k is 0xff iff the source byte % slots == k
};

struct QuantRange {
  double lo = 0.0;
  double hi = 1.0;
};

struct DerivedField {
  std::size_t offset = 0;
  std::size_t width = 0;
  DerivedRule rule = DerivedRule::Copy;
  std::size_t source = 0;
  std::vector<QuantRange> ranges;  // Quantize only
  double gain = 1.0;               // Quantize, Pwm
  std::uint8_t cut = 0;            // PinMask, Duty
  std::size_t slots = 0;           // Duty, OneHot
  std::vector<int> pins;           // PinMask
};

/// Outbound payload: the trace bytes [offset, offset + width) sent to `to`.
struct TxBinding {
  NodeId to = 0;
  std::size_t offset = 0;
  std::size_t width = 0;
};

/// One firmware build for one node.
///
/// `static_region` has length `d` and supplies every byte that no dynamic
/// region overwrites. Dynamic regions (vars, rx, derived) are pairwise
/// disjoint and lie inside [0, d).
struct FirmwareSpec {
  NodeId node = 0;
  Variant variant = Variant::Normal;
  std::size_t d = 0;
  std::vector<std::uint8_t> static_region;
  std::vector<VarField> vars;
  std::vector<RxRegion> rx;
  std::vector<DerivedField> derived;
  std::vector<TxBinding> tx;

  const RxRegion* rx_from(NodeId src) const;
  const TxBinding* tx_to(NodeId dst) const;
};

struct SwarmNode {
  NodeId id = 0;
  Role role = Role::Process;
  FirmwareSpec normal;
  FirmwareSpec anomalous;

  const FirmwareSpec& firmware(Variant v) const { return v == Variant::Normal ? normal : anomalous; }
};

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed, simple, unweighted information-flow graph.
/// `adjacency[i * n + j] == 1` iff there is an edge i -> j.
class SwarmGraph {
 public:
  SwarmGraph() = default;
  SwarmGraph(std::string name, std::uint16_t wire_id, std::vector<SwarmNode> nodes, std::vector<Edge> edges);

  const std::string& name() const { return name_; }
  std::uint16_t wire_id() const { return wire_id_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<SwarmNode>& nodes() const { return nodes_; }
  const SwarmNode& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::uint8_t>& adjacency() const { return adjacency_; }
  bool has_edge(NodeId src, NodeId dst) const { return adjacency_[src * size() + dst] != 0; }
  std::vector<NodeId> in_neighbors(NodeId dst) const;

  /// Evaluation order within one tick: sources before sinks, ties broken by
  /// role (sense, process, control) and then by id.
  const std::vector<NodeId>& step_order() const { return order_; }

  /// Largest data section over both firmware variants of every node.
  std::size_t max_d() const;
  /// Largest data section over the normal builds only.
  std::size_t max_normal_d() const;

 private:
  std::string name_;
  std::uint16_t wire_id_ = 0;
  std::vector<SwarmNode> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::uint8_t> adjacency_;
  std::vector<NodeId> order_;
};

/// Throws ValidationError on overlapping or out-of-bounds regions.
void validate_firmware(const FirmwareSpec& fw);

/// Node ids must be 0..n-1 in order; throws ValidationError otherwise, on
/// duplicate ids, edges to unknown nodes, multi-edges, self-loops, and
/// firmware that disagrees with the edge list.
SwarmGraph build_swarm(std::string name, std::uint16_t wire_id, std::vector<SwarmNode> nodes,
                       std::vector<Edge> edges);

/// Built-in topologies: "swarm1" (4 nodes) and "swarm2" (6 nodes).
SwarmGraph preset_swarm(std::string_view name);
std::vector<std::string> preset_names();

/// Deterministic static region for a firmware build: roughly `density` of
/// the bytes are nonzero constants, the rest zero-initialised storage.
std::vector<std::uint8_t> make_static_region(std::size_t d, std::uint64_t build_seed, double density);

/// Swarm config files are JSON documents; see README for the schema.
SwarmGraph load_swarm_config(const std::filesystem::path& path);
SwarmGraph parse_swarm_config(std::string_view text);
std::string dump_swarm_config(const SwarmGraph& swarm);

/// Either a preset name or a path to a config file.
SwarmGraph resolve_swarm(std::string_view name_or_path);

}  // namespace swarmnet
