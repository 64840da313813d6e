#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "swarmnet/protocol.hpp"

namespace swarmnet {

/// One attestation round's collated responses; slot j is nullopt (Missing)
/// when no valid RESP from node j arrived before the timeout.
struct SwarmResponse {
  std::uint64_t round_id = 0;
  std::vector<std::optional<DataSectionTrace>> slots;

  std::size_t missing() const;
  friend bool operator==(const SwarmResponse&, const SwarmResponse&) = default;
};

enum class PolicyAction { Drop, Delay, Replay, ReplayNextRound, FlipBit, Forge };

std::string_view to_string(PolicyAction a);

/// Rule applied to every message put on the wire. Unset match fields match
/// anything. Matching rules apply in file order; a drop ends the chain.
struct PolicyRule {
  std::optional<MsgType> msg_type;
  std::optional<NodeId> node;
  std::optional<std::uint64_t> round;
  PolicyAction action = PolicyAction::Drop;
  std::int64_t ticks = 0;   ///< Delay
  std::size_t bit = 0;      ///< FlipBit, taken modulo the message length in bits
  double probability = 1.0;
};

/// JSON form:
///   {"seed": 7, "latency": 1,
///    "rules": [{"match": {"msg_type": "RESP", "node": 2, "round": 0},
///               "action": "delay", "ticks": 5, "probability": 1.0}]}
/// Actions: drop, delay, replay, replay_next_round, flip_bit, forge.
struct TransportPolicy {
  std::uint64_t seed = 0;
  std::int64_t latency = 1;
  std::vector<PolicyRule> rules;

  static TransportPolicy lossless() { return {}; }
};

TransportPolicy parse_policy(std::string_view json_text);
TransportPolicy load_policy(const std::filesystem::path& path);
std::string dump_policy(const TransportPolicy& policy);

enum class Endpoint { Gateway, Node, Adversary };

struct ProtocolEvent {
  std::uint64_t round = 0;
  std::int64_t tick = 0;
  Endpoint from = Endpoint::Gateway;
  Endpoint to = Endpoint::Node;
  MsgType type = MsgType::Req;
  NodeId node = 0;
  std::string what;  ///< "send", "drop", "deliver", "inject", ...
  Reject outcome = Reject::None;
};

std::string format_event(const ProtocolEvent& e);

/// Deterministic message scheduler holding the adversary's captured
/// messages between rounds.
class Transport {
 public:
  explicit Transport(TransportPolicy policy = {}) : policy_(std::move(policy)) {}
  const TransportPolicy& policy() const { return policy_; }

 private:
  friend struct RoundRunner;
  TransportPolicy policy_;
  std::vector<std::pair<Endpoint, Bytes>> captured_;
};

struct RoundResult {
  SwarmResponse response;
  std::vector<ProtocolEvent> events;

  /// Count of deliveries rejected with the given reason.
  std::size_t rejected(Reject reason) const;
};

/// Steps 2-5b for every node: REQ at tick 0, one `latency` per hop,
/// deliveries serialised by (tick, type, node_id, sequence). Nodes answer
/// with traces[j]. Ends with gateway_close_round.
RoundResult run_round(GatewaySwarmState& gateway, std::vector<NodeSecurityState>& nodes,
                      const std::vector<DataSectionTrace>& traces, Transport& transport, std::uint64_t round_id);

}  // namespace swarmnet
