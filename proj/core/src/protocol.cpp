#include "swarmnet/protocol.hpp"

#include <algorithm>

#include "swarmnet/error.hpp"

namespace swarmnet {

std::string_view to_string(Reject r) {
  switch (r) {
    case Reject::None: return "ok";
    case Reject::Malformed: return "Malformed";
    case Reject::WrongAddress: return "WrongAddress";
    case Reject::WrongType: return "WrongType";
    case Reject::BadMac: return "BadMac";
    case Reject::NonceMismatch: return "NonceMismatch";
    case Reject::EchoMismatch: return "EchoMismatch";
    case Reject::Replay: return "Replay";
    case Reject::NoExchange: return "NoExchange";
    case Reject::LateResponse: return "LateResponse";
    case Reject::Unreachable: return "Unreachable";
  }
  return "?";
}

GatewayNodeState& GatewaySwarmState::node(NodeId id) {
  for (auto& s : nodes)
    if (s.node_id == id) return s;
  throw ValidationError("node " + std::to_string(id) + " is not registered with the gateway");
}

const GatewayNodeState& GatewaySwarmState::node(NodeId id) const {
  return const_cast<GatewaySwarmState*>(this)->node(id);
}

namespace {

Block16 random_block(Rng& rng) {
  Block16 b{};
  rng.fill(b);
  return b;
}

Digest32 mac_with_nonce(const Key16& key, const WireMessage& msg, const Block16& nonce) {
  Bytes data = mac_input(msg);
  data.insert(data.end(), nonce.begin(), nonce.end());
  return hmac_sha256(key, data);
}

Digest32 mac_of(const Key16& key, const WireMessage& msg) {
  return hmac_sha256(key, mac_input(msg));
}

bool mac_ok(const Digest32& expected, const Digest32& got) {
  return constant_time_equal(expected, got);
}

void seal(WireMessage& msg, const Key16& key, Rng& rng, const Bytes& plaintext) {
  msg.iv = random_block(rng);
  msg.payload = aes128_ctr(key, msg.iv, plaintext);
  msg.mac = mac_of(key, msg);
}

}  // namespace

SecuritySetup setup_security(std::uint16_t swarm_id, std::size_t n, std::uint64_t seed, std::size_t resync_size,
                             std::int64_t timeout) {
  if (timeout < 2) throw ValidationError("timeout must cover one round trip (>= 2 ticks)");
  SecuritySetup setup;
  setup.gateway.swarm_id = swarm_id;
  setup.gateway.resync_size = resync_size;
  setup.gateway.timeout = timeout;
  setup.gateway.rng = Rng::derive(seed, "gateway");
  Rng keys = Rng::derive(seed, "setup");
  std::vector<Block16> issued;
  auto fresh = [&] {
    for (;;) {
      Block16 b = random_block(keys);
      if (std::find(issued.begin(), issued.end(), b) == issued.end()) {
        issued.push_back(b);
        return b;
      }
    }
  };
  for (std::size_t j = 0; j < n; ++j) {
    NodeSecurityState node;
    node.swarm_id = swarm_id;
    node.node_id = static_cast<NodeId>(j);
    node.key = random_block(keys);
    node.c = fresh();
    for (std::size_t r = 0; r < resync_size; ++r) node.resync.push_back(fresh());
    node.rng = Rng::derive(seed, "node", j);

    GatewayNodeState mirror;
    mirror.node_id = node.node_id;
    mirror.key = node.key;
    mirror.c = node.c;
    mirror.resync = node.resync;
    setup.gateway.nodes.push_back(mirror);
    setup.nodes.push_back(std::move(node));
  }
  return setup;
}

WireMessage make_request(std::uint16_t swarm_id, NodeId node_id, const Key16& key, const Block16& nonce) {
  WireMessage msg;
  msg.type = MsgType::Req;
  msg.swarm_id = swarm_id;
  msg.node_id = node_id;
  msg.mac = mac_with_nonce(key, msg, nonce);
  return msg;
}

std::optional<WireMessage> gateway_make_request(GatewaySwarmState& state, NodeId node_id) {
  auto& node = state.node(node_id);
  node.completed = false;
  node.awaiting = false;
  if (node.unreachable) return std::nullopt;
  if (node.needs_resync) {
    if (node.resync_cursor >= node.resync.size()) {
      node.unreachable = true;
      return std::nullopt;
    }
    node.expected = node.resync[node.resync_cursor++];
  } else {
    node.expected = node.c;
  }
  node.awaiting = true;
  return make_request(state.swarm_id, node_id, node.key, node.expected);
}

NodeReply node_handle_request(const WireMessage& msg, NodeSecurityState& state, const DataSectionTrace& trace) {
  if (msg.type != MsgType::Req) return {Reject::WrongType, {}};
  if (msg.swarm_id != state.swarm_id || msg.node_id != state.node_id) return {Reject::WrongAddress, {}};

  std::optional<Block16> nonce;
  if (mac_ok(mac_with_nonce(state.key, msg, state.c), msg.mac)) {
    if (state.answered && state.round_nonce == state.c) return {Reject::Replay, {}};
    nonce = state.c;
  } else {
    for (std::size_t r = state.resync_cursor; r < state.resync.size(); ++r) {
      if (mac_ok(mac_with_nonce(state.key, msg, state.resync[r]), msg.mac)) {
        state.resync_cursor = r + 1;
        nonce = state.resync[r];
        break;
      }
    }
  }
  if (!nonce) return {Reject::BadMac, {}};

  state.round_nonce = *nonce;
  state.echo = random_block(state.rng);
  state.answered = true;

  Bytes plain(state.echo.begin(), state.echo.end());
  plain.insert(plain.end(), nonce->begin(), nonce->end());
  plain.insert(plain.end(), trace.bytes.begin(), trace.bytes.end());

  WireMessage resp;
  resp.type = MsgType::Resp;
  resp.swarm_id = state.swarm_id;
  resp.node_id = state.node_id;
  seal(resp, state.key, state.rng, plain);
  return {Reject::None, std::move(resp)};
}

GatewayReply gateway_handle_response(const WireMessage& msg, GatewaySwarmState& state, std::int64_t tick) {
  if (msg.type != MsgType::Resp) return {Reject::WrongType, {}, {}};
  if (msg.swarm_id != state.swarm_id) return {Reject::WrongAddress, {}, {}};
  auto it = std::find_if(state.nodes.begin(), state.nodes.end(),
                         [&](const GatewayNodeState& s) { return s.node_id == msg.node_id; });
  if (it == state.nodes.end()) return {Reject::WrongAddress, {}, {}};
  auto& node = *it;

  if (!mac_ok(mac_of(node.key, msg), msg.mac)) return {Reject::BadMac, {}, {}};
  if (!node.awaiting) return {node.completed ? Reject::Replay : Reject::NoExchange, {}, {}};
  if (tick > state.timeout) return {Reject::LateResponse, {}, {}};

  const Bytes plain = aes128_ctr(node.key, msg.iv, msg.payload);
  if (plain.size() < 32) return {Reject::Malformed, {}, {}};
  Block16 echo{};
  Block16 embedded{};
  std::copy_n(plain.begin(), 16, echo.begin());
  std::copy_n(plain.begin() + 16, 16, embedded.begin());
  if (!constant_time_equal(embedded, node.expected)) return {Reject::NonceMismatch, {}, {}};

  Block16 c_new{};
  do {
    c_new = random_block(state.rng);
  } while (c_new == node.c || std::find(node.resync.begin(), node.resync.end(), c_new) != node.resync.end());
  node.c = c_new;
  node.awaiting = false;
  node.completed = true;
  node.needs_resync = false;

  GatewayReply reply;
  reply.trace = DataSectionTrace{msg.node_id, 0, Bytes(plain.begin() + 32, plain.end())};
  Bytes upd(echo.begin(), echo.end());
  upd.insert(upd.end(), c_new.begin(), c_new.end());
  WireMessage update;
  update.type = MsgType::Update;
  update.swarm_id = state.swarm_id;
  update.node_id = msg.node_id;
  seal(update, node.key, state.rng, upd);
  reply.update = std::move(update);
  return reply;
}

Reject node_handle_update(const WireMessage& msg, NodeSecurityState& state) {
  if (msg.type != MsgType::Update) return Reject::WrongType;
  if (msg.swarm_id != state.swarm_id || msg.node_id != state.node_id) return Reject::WrongAddress;
  if (!mac_ok(mac_of(state.key, msg), msg.mac)) return Reject::BadMac;
  if (!state.answered) return Reject::NoExchange;
  const Bytes plain = aes128_ctr(state.key, msg.iv, msg.payload);
  if (plain.size() != 32) return Reject::Malformed;
  if (!std::equal(state.echo.begin(), state.echo.end(), plain.begin())) return Reject::EchoMismatch;
  std::copy_n(plain.begin() + 16, 16, state.c.begin());
  state.answered = false;
  return Reject::None;
}

void gateway_close_round(GatewaySwarmState& state) {
  for (auto& node : state.nodes) {
    if (!node.completed && !node.unreachable) node.needs_resync = true;
    node.awaiting = false;
  }
}

}  // namespace swarmnet
