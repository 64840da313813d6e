#include "swarmnet/transport.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>

#include "json.hpp"
#include "swarmnet/error.hpp"

namespace swarmnet {

std::size_t SwarmResponse::missing() const {
  return static_cast<std::size_t>(std::count(slots.begin(), slots.end(), std::nullopt));
}

std::string_view to_string(PolicyAction a) {
  switch (a) {
    case PolicyAction::Drop: return "drop";
    case PolicyAction::Delay: return "delay";
    case PolicyAction::Replay: return "replay";
    case PolicyAction::ReplayNextRound: return "replay_next_round";
    case PolicyAction::FlipBit: return "flip_bit";
    case PolicyAction::Forge: return "forge";
  }
  return "?";
}

namespace {

using nlohmann::json;

MsgType msg_type_from_string(const std::string& s) {
  if (s == "REQ") return MsgType::Req;
  if (s == "RESP") return MsgType::Resp;
  if (s == "UPDATE") return MsgType::Update;
  throw FormatError("unknown msg_type '" + s + "'");
}

PolicyAction action_from_string(const std::string& s) {
  for (auto a : {PolicyAction::Drop, PolicyAction::Delay, PolicyAction::Replay, PolicyAction::ReplayNextRound,
                 PolicyAction::FlipBit, PolicyAction::Forge})
    if (to_string(a) == s) return a;
  throw FormatError("unknown transport action '" + s + "'");
}

std::string_view endpoint_name(Endpoint e) {
  switch (e) {
    case Endpoint::Gateway: return "gateway";
    case Endpoint::Node: return "node";
    case Endpoint::Adversary: return "adversary";
  }
  return "?";
}

}  // namespace

TransportPolicy parse_policy(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("transport policy: ") + e.what());
  }
  TransportPolicy p;
  try {
    p.seed = j.value("seed", std::uint64_t{0});
    p.latency = j.value("latency", std::int64_t{1});
    if (p.latency < 1) throw FormatError("transport policy: latency must be >= 1");
    for (const auto& r : j.value("rules", json::array())) {
      PolicyRule rule;
      if (r.contains("match")) {
        const auto& m = r.at("match");
        if (m.contains("msg_type")) rule.msg_type = msg_type_from_string(m.at("msg_type").get<std::string>());
        if (m.contains("node")) rule.node = m.at("node").get<NodeId>();
        if (m.contains("round")) rule.round = m.at("round").get<std::uint64_t>();
      }
      rule.action = action_from_string(r.at("action").get<std::string>());
      rule.ticks = r.value("ticks", std::int64_t{0});
      rule.bit = r.value("bit", std::size_t{0});
      rule.probability = r.value("probability", 1.0);
      if (rule.probability < 0.0 || rule.probability > 1.0)
        throw FormatError("transport policy: probability outside [0, 1]");
      if (rule.action == PolicyAction::Delay && rule.ticks < 0)
        throw FormatError("transport policy: negative delay");
      p.rules.push_back(rule);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("transport policy: ") + e.what());
  }
  return p;
}

TransportPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open transport policy " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_policy(ss.str());
}

std::string dump_policy(const TransportPolicy& p) {
  json j;
  j["seed"] = p.seed;
  j["latency"] = p.latency;
  j["rules"] = json::array();
  for (const auto& r : p.rules) {
    json jr;
    json m = json::object();
    if (r.msg_type) m["msg_type"] = std::string(to_string(*r.msg_type));
    if (r.node) m["node"] = *r.node;
    if (r.round) m["round"] = *r.round;
    jr["match"] = m;
    jr["action"] = std::string(to_string(r.action));
    if (r.action == PolicyAction::Delay) jr["ticks"] = r.ticks;
    if (r.action == PolicyAction::FlipBit) jr["bit"] = r.bit;
    jr["probability"] = r.probability;
    j["rules"].push_back(jr);
  }
  return j.dump(2);
}

std::string format_event(const ProtocolEvent& e) {
  std::ostringstream os;
  os << "round " << e.round << " t=" << e.tick << " " << to_string(e.type) << " N" << e.node << " "
     << endpoint_name(e.from) << "->" << endpoint_name(e.to) << " " << e.what;
  if (e.what == "deliver") os << " " << to_string(e.outcome);
  return os.str();
}

std::size_t RoundResult::rejected(Reject reason) const {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [&](const ProtocolEvent& e) {
    return e.what == "deliver" && e.outcome == reason;
  }));
}

struct RoundRunner {
  struct Delivery {
    std::int64_t tick;
    int priority;
    NodeId node;
    std::uint64_t seq;
    Endpoint from;
    Endpoint to;
    Bytes bytes;
    bool injected;

    bool operator>(const Delivery& o) const {
      return std::tie(tick, priority, node, seq) > std::tie(o.tick, o.priority, o.node, o.seq);
    }
  };

  GatewaySwarmState& gateway;
  std::vector<NodeSecurityState>& nodes;
  const std::vector<DataSectionTrace>& traces;
  Transport& transport;
  std::uint64_t round;
  RoundResult result;
  Rng rng;
  std::uint64_t seq = 0;
  std::priority_queue<Delivery, std::vector<Delivery>, std::greater<>> queue;
  std::vector<std::pair<Endpoint, Bytes>> next_captured;

  RoundRunner(GatewaySwarmState& g, std::vector<NodeSecurityState>& n, const std::vector<DataSectionTrace>& t,
              Transport& tr, std::uint64_t r)
      : gateway(g), nodes(n), traces(t), transport(tr), round(r), rng(Rng::derive(tr.policy_.seed, "transport", r)) {}

  static int priority_of(MsgType t) { return static_cast<int>(t); }

  void log(std::int64_t tick, Endpoint from, Endpoint to, MsgType type, NodeId node, std::string what,
           Reject outcome = Reject::None) {
    result.events.push_back({round, tick, from, to, type, node, std::move(what), outcome});
  }

  void enqueue(std::int64_t tick, Endpoint from, Endpoint to, const WireMessage& hdr, Bytes bytes, bool injected) {
    queue.push({tick, priority_of(hdr.type), hdr.node_id, seq++, from, to, std::move(bytes), injected});
  }

  Bytes forge(const WireMessage& msg) {
    WireMessage f = msg;
    Key16 attacker{};
    rng.fill(attacker);
    rng.fill(f.iv);
    rng.fill(f.payload);
    f.mac = hmac_sha256(attacker, mac_input(f));
    return encode(f);
  }

  void send(std::int64_t now, Endpoint from, Endpoint to, const WireMessage& msg) {
    log(now, from, to, msg.type, msg.node_id, "send");
    Bytes bytes = encode(msg);
    std::int64_t arrival = now + transport.policy_.latency;
    for (const auto& rule : transport.policy_.rules) {
      if (rule.msg_type && *rule.msg_type != msg.type) continue;
      if (rule.node && *rule.node != msg.node_id) continue;
      if (rule.round && *rule.round != round) continue;
      if (rule.probability < 1.0 && !(rng.uniform01() < rule.probability)) continue;
      switch (rule.action) {
        case PolicyAction::Drop:
          log(now, from, to, msg.type, msg.node_id, "drop");
          return;
        case PolicyAction::Delay:
          arrival += rule.ticks;
          log(now, from, to, msg.type, msg.node_id, "delay " + std::to_string(rule.ticks));
          break;
        case PolicyAction::Replay:
          enqueue(arrival + 1, Endpoint::Adversary, to, msg, bytes, true);
          log(now, Endpoint::Adversary, to, msg.type, msg.node_id, "capture for replay");
          break;
        case PolicyAction::ReplayNextRound:
          next_captured.emplace_back(to, bytes);
          log(now, Endpoint::Adversary, to, msg.type, msg.node_id, "capture for next round");
          break;
        case PolicyAction::FlipBit: {
          const std::size_t bit = rule.bit % (bytes.size() * 8);
          bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
          log(now, from, to, msg.type, msg.node_id, "flip bit " + std::to_string(bit));
          break;
        }
        case PolicyAction::Forge:
          bytes = forge(msg);
          log(now, Endpoint::Adversary, to, msg.type, msg.node_id, "forge");
          break;
      }
    }
    enqueue(arrival, from, to, msg, std::move(bytes), false);
  }

  std::size_t node_index(NodeId id) const {
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if (nodes[k].node_id == id) return k;
    return nodes.size();
  }

  void deliver(const Delivery& d) {
    WireMessage msg;
    try {
      msg = decode(d.bytes);
    } catch (const FormatError&) {
      log(d.tick, d.from, d.to, MsgType::Req, d.node, "deliver", Reject::Malformed);
      return;
    }
    if (d.to == Endpoint::Gateway) {
      GatewayReply reply = gateway_handle_response(msg, gateway, d.tick);
      log(d.tick, d.from, d.to, msg.type, msg.node_id, "deliver", reply.reject);
      if (reply.reject != Reject::None) return;
      const auto slot = static_cast<std::size_t>(msg.node_id);
      if (slot < result.response.slots.size()) {
        reply.trace->tick = traces[slot].tick;
        result.response.slots[slot] = std::move(*reply.trace);
      }
      send(d.tick, Endpoint::Gateway, Endpoint::Node, *reply.update);
      return;
    }
    const std::size_t k = node_index(msg.node_id);
    if (k == nodes.size()) {
      log(d.tick, d.from, d.to, msg.type, msg.node_id, "deliver", Reject::WrongAddress);
      return;
    }
    auto& node = nodes[k];
    if (msg.type == MsgType::Update) {
      log(d.tick, d.from, d.to, msg.type, msg.node_id, "deliver", node_handle_update(msg, node));
      return;
    }
    NodeReply reply = node_handle_request(msg, node, traces[k]);
    log(d.tick, d.from, d.to, msg.type, msg.node_id, "deliver", reply.reject);
    if (reply.resp) send(d.tick, Endpoint::Node, Endpoint::Gateway, *reply.resp);
  }

  RoundResult run() {
    if (traces.size() != nodes.size()) throw ValidationError("one trace per node is required");
    result.response.round_id = round;
    result.response.slots.assign(nodes.size(), std::nullopt);

    for (auto& [to, bytes] : transport.captured_) {
      WireMessage hdr;
      try {
        hdr = decode(bytes);
      } catch (const FormatError&) {
        hdr.node_id = 0;
      }
      log(0, Endpoint::Adversary, to, hdr.type, hdr.node_id, "inject");
      enqueue(transport.policy_.latency, Endpoint::Adversary, to, hdr, bytes, true);
    }
    transport.captured_.clear();

    for (const auto& node : nodes) {
      auto req = gateway_make_request(gateway, node.node_id);
      if (!req) {
        log(0, Endpoint::Gateway, Endpoint::Node, MsgType::Req, node.node_id, "unreachable", Reject::Unreachable);
        continue;
      }
      send(0, Endpoint::Gateway, Endpoint::Node, *req);
    }
    while (!queue.empty()) {
      Delivery d = queue.top();
      queue.pop();
      deliver(d);
    }
    gateway_close_round(gateway);
    transport.captured_ = std::move(next_captured);
    return std::move(result);
  }
};

RoundResult run_round(GatewaySwarmState& gateway, std::vector<NodeSecurityState>& nodes,
                      const std::vector<DataSectionTrace>& traces, Transport& transport, std::uint64_t round_id) {
  return RoundRunner(gateway, nodes, traces, transport, round_id).run();
}

}  // namespace swarmnet
