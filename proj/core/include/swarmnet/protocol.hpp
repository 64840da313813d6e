#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "swarmnet/crypto.hpp"
#include "swarmnet/firmware.hpp"
#include "swarmnet/rng.hpp"
#include "swarmnet/wire.hpp"

namespace swarmnet {

inline constexpr std::size_t kDefaultResyncNonces = 8;
inline constexpr std::int64_t kDefaultTimeoutTicks = 4;

enum class Reject {
  None,
  Malformed,      ///< undecodable bytes
  WrongAddress,   ///< swarm or node id does not match the receiver
  WrongType,      ///< message type not expected by this handler
  BadMac,
  NonceMismatch,  ///< RESP carries a C_j other than the one this round expects
  EchoMismatch,   ///< UPDATE echoes a C other than the one the node sent
  Replay,         ///< valid message for an exchange that already completed
  NoExchange,     ///< nothing outstanding to match the message against
  LateResponse,
  Unreachable,    ///< resync list exhausted
};

std::string_view to_string(Reject r);

/// Prover-side secrets and per-round state.
struct NodeSecurityState {
  std::uint16_t swarm_id = 0;
  NodeId node_id = 0;
  Key16 key{};
  Block16 c{};  ///< current round nonce C_j
  std::vector<Block16> resync;  ///< L_R, shared with the gateway at setup
  std::size_t resync_cursor = 0;  ///< first L_R entry not yet consumed

  // Exchange in progress: set after a RESP is sent, cleared by a valid UPDATE.
  bool answered = false;
  Block16 echo{};  ///< C sent in the RESP
  Block16 round_nonce{};  ///< nonce that authenticated the REQ (C_j or an L_R entry)

  Rng rng{0};
};

/// Gateway mirror of one node.
struct GatewayNodeState {
  NodeId node_id = 0;
  Key16 key{};
  Block16 c{};
  std::vector<Block16> resync;
  std::size_t resync_cursor = 0;
  bool needs_resync = false;
  bool unreachable = false;

  // Exchange in progress for the current round.
  bool awaiting = false;
  bool completed = false;
  Block16 expected{};  ///< nonce bound into this round's REQ
};

struct GatewaySwarmState {
  std::uint16_t swarm_id = 0;
  std::vector<GatewayNodeState> nodes;
  std::size_t resync_size = kDefaultResyncNonces;
  std::int64_t timeout = kDefaultTimeoutTicks;
  Rng rng{0};

  GatewayNodeState& node(NodeId id);
  const GatewayNodeState& node(NodeId id) const;
};

struct SecuritySetup {
  GatewaySwarmState gateway;
  std::vector<NodeSecurityState> nodes;
};

/// Installs keys, initial nonces and L_R lists for n nodes. L_R entries are
/// distinct from each other and from every initial C_j.
SecuritySetup setup_security(std::uint16_t swarm_id, std::size_t n, std::uint64_t seed,
                             std::size_t resync_size = kDefaultResyncNonces,
                             std::int64_t timeout = kDefaultTimeoutTicks);

/// REQ for the node's current C_j, or for the next L_R nonce when the node is
/// marked for resync. Opens the node's exchange for this round. Returns
/// nullopt once the node is unreachable (L_R exhausted). Throws
/// ValidationError for an unregistered node.
std::optional<WireMessage> gateway_make_request(GatewaySwarmState& state, NodeId node_id);

/// REQ bytes as a pure function of (key, nonce); used by the gateway and by tests.
WireMessage make_request(std::uint16_t swarm_id, NodeId node_id, const Key16& key, const Block16& nonce);

struct NodeReply {
  Reject reject = Reject::None;
  std::optional<WireMessage> resp;
};

/// Verifies a REQ against C_j, or against L_R entries from the cursor
/// onwards (consuming up to the match), then answers with
/// Enc(K_j, iv, C || C_j || T').
NodeReply node_handle_request(const WireMessage& msg, NodeSecurityState& state, const DataSectionTrace& trace);

struct GatewayReply {
  Reject reject = Reject::None;
  std::optional<DataSectionTrace> trace;
  std::optional<WireMessage> update;
};

/// Verifies, decrypts and checks the embedded nonce of a RESP received at
/// `tick` ticks into the round. On success commits C_new and returns the
/// trace plus an UPDATE carrying Enc(K_j, iv', C || C_new).
GatewayReply gateway_handle_response(const WireMessage& msg, GatewaySwarmState& state, std::int64_t tick);

/// Verifies an UPDATE, checks the echoed C and commits C_j <- C_new.
Reject node_handle_update(const WireMessage& msg, NodeSecurityState& state);

/// Marks every node whose exchange did not complete for resync and resets
/// per-round bookkeeping.
void gateway_close_round(GatewaySwarmState& state);

}  // namespace swarmnet
