#include <gtest/gtest.h>

#include <set>

#include "swarmnet/error.hpp"
#include "swarmnet/transport.hpp"

using namespace swarmnet;

namespace {

constexpr std::uint16_t kSwarm = 7;

std::vector<DataSectionTrace> traces_for(std::size_t n, std::uint8_t fill = 0x5a) {
  std::vector<DataSectionTrace> t;
  for (std::size_t j = 0; j < n; ++j) t.push_back({static_cast<NodeId>(j), 0, Bytes(40 + j, fill)});
  return t;
}

struct Fixture {
  SecuritySetup setup;
  Transport transport;
  std::vector<DataSectionTrace> traces;
  std::uint64_t round = 0;

  explicit Fixture(TransportPolicy policy = {}, std::size_t n = 4)
      : setup(setup_security(kSwarm, n, 42)), transport(std::move(policy)), traces(traces_for(n)) {}

  RoundResult next() { return run_round(setup.gateway, setup.nodes, traces, transport, round++); }
};

PolicyRule rule(PolicyAction action, std::optional<MsgType> type, std::optional<NodeId> node = {},
                std::optional<std::uint64_t> round = {}) {
  PolicyRule r;
  r.action = action;
  r.msg_type = type;
  r.node = node;
  r.round = round;
  return r;
}

TransportPolicy policy_of(std::vector<PolicyRule> rules) {
  TransportPolicy p;
  p.rules = std::move(rules);
  return p;
}

std::size_t accepted_deliveries(const RoundResult& r, MsgType type, NodeId node) {
  std::size_t k = 0;
  for (const auto& e : r.events)
    if (e.what == "deliver" && e.type == type && e.node == node && e.outcome == Reject::None) ++k;
  return k;
}

}  // namespace

TEST(Protocol, LosslessRoundCollectsEveryTrace) {
  Fixture f;
  const RoundResult r = f.next();
  ASSERT_EQ(r.response.slots.size(), 4u);
  EXPECT_EQ(r.response.missing(), 0u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(r.response.slots[j]->bytes, f.traces[j].bytes);
  for (auto reason : {Reject::BadMac, Reject::Replay, Reject::NonceMismatch, Reject::EchoMismatch})
    EXPECT_EQ(r.rejected(reason), 0u);
}

TEST(Protocol, NonceRotatesEveryRoundForTenRounds) {
  Fixture f;
  std::vector<std::set<Block16>> seen(4);
  for (std::size_t j = 0; j < 4; ++j) seen[j].insert(f.setup.nodes[j].c);
  for (int round = 0; round < 10; ++round) {
    const RoundResult r = f.next();
    EXPECT_EQ(r.response.missing(), 0u) << "round " << round;
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(f.setup.nodes[j].c, f.setup.gateway.nodes[j].c);
      EXPECT_TRUE(seen[j].insert(f.setup.nodes[j].c).second) << "nonce reused by node " << j;
    }
  }
}

TEST(Protocol, RequestDoesNotCarryTheNonce) {
  auto s = setup_security(kSwarm, 1, 3);
  const auto req = gateway_make_request(s.gateway, 0);
  ASSERT_TRUE(req);
  EXPECT_TRUE(req->payload.empty());
  const Bytes wire = encode(*req);
  const Block16& c = s.nodes[0].c;
  EXPECT_EQ(std::search(wire.begin(), wire.end(), c.begin(), c.end()), wire.end());
}

TEST(Protocol, SetupIssuesDistinctNonces) {
  auto s = setup_security(kSwarm, 6, 9);
  std::set<Block16> all;
  std::size_t count = 0;
  for (const auto& node : s.nodes) {
    all.insert(node.c);
    ++count;
    for (const auto& r : node.resync) {
      all.insert(r);
      ++count;
    }
    EXPECT_EQ(node.resync.size(), kDefaultResyncNonces);
  }
  EXPECT_EQ(all.size(), count);
  EXPECT_THROW(setup_security(kSwarm, 2, 1, 8, 1), ValidationError);
}

TEST(Protocol, ReplayedRequestInRoundIsRejected) {
  for (NodeId j = 0; j < 4; ++j) {
    Fixture f(policy_of({rule(PolicyAction::Replay, MsgType::Req, j)}));
    const RoundResult r = f.next();
    EXPECT_EQ(r.rejected(Reject::Replay), 1u);
    EXPECT_EQ(r.response.missing(), 0u);
    EXPECT_EQ(accepted_deliveries(r, MsgType::Req, j), 1u);
  }
}

TEST(Protocol, ReplayedResponseInRoundIsRejected) {
  for (NodeId j = 0; j < 4; ++j) {
    Fixture f(policy_of({rule(PolicyAction::Replay, MsgType::Resp, j)}));
    const RoundResult r = f.next();
    EXPECT_EQ(r.rejected(Reject::Replay), 1u);
    EXPECT_EQ(accepted_deliveries(r, MsgType::Resp, j), 1u);
    EXPECT_EQ(r.response.missing(), 0u);
  }
}

TEST(Protocol, ReplayedUpdateInRoundIsRejected) {
  Fixture f(policy_of({rule(PolicyAction::Replay, MsgType::Update, 2)}));
  const RoundResult r = f.next();
  EXPECT_EQ(r.rejected(Reject::NoExchange), 1u);
  EXPECT_EQ(accepted_deliveries(r, MsgType::Update, 2), 1u);
  EXPECT_EQ(f.setup.nodes[2].c, f.setup.gateway.nodes[2].c);
}

TEST(Protocol, MessagesReplayedIntoTheNextRoundAreRejected) {
  for (MsgType type : {MsgType::Req, MsgType::Resp, MsgType::Update}) {
    Fixture f(policy_of({rule(PolicyAction::ReplayNextRound, type, 1, 0)}));
    f.next();
    const RoundResult r = f.next();
    std::size_t rejected = 0;
    for (const auto& e : r.events)
      if (e.what == "deliver" && e.node == 1 && e.type == type && e.outcome != Reject::None) ++rejected;
    EXPECT_EQ(rejected, 1u) << to_string(type);
    EXPECT_EQ(r.response.missing(), 0u) << to_string(type);
    EXPECT_EQ(accepted_deliveries(r, type, 1), 1u) << to_string(type);
    EXPECT_EQ(f.setup.nodes[1].c, f.setup.gateway.nodes[1].c);
  }
}

TEST(Protocol, OldRequestFailsMacAgainstRotatedNonce) {
  Fixture f(policy_of({rule(PolicyAction::ReplayNextRound, MsgType::Req, 0, 0)}));
  f.next();
  const RoundResult r = f.next();
  EXPECT_EQ(r.rejected(Reject::BadMac), 1u);
}

TEST(Protocol, OldResponseFailsNonceCheck) {
  Fixture f(policy_of({rule(PolicyAction::ReplayNextRound, MsgType::Resp, 3, 0)}));
  f.next();
  const RoundResult r = f.next();
  EXPECT_EQ(r.rejected(Reject::NonceMismatch), 1u);
}

// Every single-bit flip of REQ and UPDATE, and every 5th bit of RESP, must be
// rejected and must not let a modified message through.
TEST(Protocol, EveryTamperedMessageIsRejected) {
  const std::size_t n = 2;
  const auto traces = traces_for(n);
  for (MsgType type : {MsgType::Req, MsgType::Resp, MsgType::Update}) {
    const std::size_t bytes = type == MsgType::Req      ? kWireHeaderBytes + kWireMacBytes
                              : type == MsgType::Update ? kWireHeaderBytes + 32 + kWireMacBytes
                                                        : kWireHeaderBytes + 32 + traces[1].bytes.size() + kWireMacBytes;
    const std::size_t stride = type == MsgType::Resp ? 5 : 1;
    for (std::size_t bit = 0; bit < bytes * 8; bit += stride) {
      PolicyRule r = rule(PolicyAction::FlipBit, type, 1);
      r.bit = bit;
      Fixture f(policy_of({r}), n);
      const RoundResult res = f.next();
      ASSERT_EQ(accepted_deliveries(res, type, 1), 0u) << to_string(type) << " bit " << bit;
      if (type != MsgType::Update) ASSERT_FALSE(res.response.slots[1].has_value()) << to_string(type) << " bit " << bit;
      ASSERT_TRUE(res.response.slots[0].has_value());
    }
  }
}

TEST(Protocol, ForgedMessagesWithoutTheKeyAreRejected) {
  for (MsgType type : {MsgType::Req, MsgType::Resp, MsgType::Update})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      TransportPolicy p = policy_of({rule(PolicyAction::Forge, type, 0)});
      p.seed = seed;
      Fixture f(p, 2);
      const RoundResult r = f.next();
      EXPECT_EQ(accepted_deliveries(r, type, 0), 0u);
      EXPECT_EQ(r.rejected(Reject::BadMac), 1u);
    }
}

TEST(Protocol, DroppedResponseIsMissingAndResyncRestoresLiveness) {
  Fixture f(policy_of({rule(PolicyAction::Drop, MsgType::Resp, 2, 0)}));
  const RoundResult r0 = f.next();
  EXPECT_FALSE(r0.response.slots[2].has_value());
  EXPECT_EQ(r0.response.missing(), 1u);
  EXPECT_TRUE(f.setup.gateway.nodes[2].needs_resync);
  const RoundResult r1 = f.next();
  EXPECT_EQ(r1.response.missing(), 0u);
  EXPECT_FALSE(f.setup.gateway.nodes[2].needs_resync);
  EXPECT_EQ(f.setup.gateway.nodes[2].resync_cursor, 1u);
  EXPECT_EQ(f.setup.nodes[2].c, f.setup.gateway.nodes[2].c);
}

TEST(Protocol, DroppedUpdateDesynchronisesThenResyncRecovers) {
  Fixture f(policy_of({rule(PolicyAction::Drop, MsgType::Update, 1, 0)}));
  const RoundResult r0 = f.next();
  EXPECT_EQ(r0.response.missing(), 0u);
  EXPECT_NE(f.setup.nodes[1].c, f.setup.gateway.nodes[1].c);
  const RoundResult r1 = f.next();
  EXPECT_FALSE(r1.response.slots[1].has_value());
  EXPECT_EQ(r1.rejected(Reject::BadMac), 1u);
  const RoundResult r2 = f.next();
  EXPECT_EQ(r2.response.missing(), 0u);
  EXPECT_EQ(f.setup.nodes[1].c, f.setup.gateway.nodes[1].c);
  const RoundResult r3 = f.next();
  EXPECT_EQ(r3.response.missing(), 0u);
}

TEST(Protocol, DelayPastTimeoutIsLateAndRecovers) {
  PolicyRule r = rule(PolicyAction::Delay, MsgType::Resp, 0, 0);
  r.ticks = kDefaultTimeoutTicks + 1;
  Fixture f(policy_of({r}));
  const RoundResult r0 = f.next();
  EXPECT_EQ(r0.rejected(Reject::LateResponse), 1u);
  EXPECT_FALSE(r0.response.slots[0].has_value());
  EXPECT_EQ(f.next().response.missing(), 0u);
}

TEST(Protocol, ExhaustedResyncListMakesNodeUnreachable) {
  Fixture f(policy_of({rule(PolicyAction::Drop, MsgType::Resp, 3)}));
  for (std::size_t k = 0; k <= kDefaultResyncNonces; ++k) f.next();
  EXPECT_EQ(f.setup.gateway.nodes[3].resync_cursor, kDefaultResyncNonces);
  const RoundResult r = f.next();
  EXPECT_TRUE(f.setup.gateway.nodes[3].unreachable);
  bool logged = false;
  for (const auto& e : r.events) logged |= e.what == "unreachable" && e.node == 3;
  EXPECT_TRUE(logged);
  EXPECT_FALSE(gateway_make_request(f.setup.gateway, 3).has_value());
}

TEST(Protocol, NodeSkipsResyncEntriesTheGatewayAlreadyConsumed) {
  // REQs for node 0 lost in rounds 0 and 1: the gateway burns L_R[0] in
  // round 1 and uses L_R[1] in round 2; the node scans forward to it.
  Fixture f(policy_of({rule(PolicyAction::Drop, MsgType::Req, 0, 0), rule(PolicyAction::Drop, MsgType::Req, 0, 1)}));
  f.next();
  f.next();
  const RoundResult r = f.next();
  EXPECT_TRUE(r.response.slots[0].has_value());
  EXPECT_EQ(f.setup.nodes[0].resync_cursor, 2u);
}

TEST(Protocol, HandlersRejectWrongTypeAndAddress) {
  auto s = setup_security(kSwarm, 2, 5);
  auto req = *gateway_make_request(s.gateway, 0);
  const auto trace = traces_for(2)[0];
  EXPECT_EQ(node_handle_request(req, s.nodes[1], trace).reject, Reject::WrongAddress);
  EXPECT_EQ(node_handle_update(req, s.nodes[0]), Reject::WrongType);
  EXPECT_EQ(gateway_handle_response(req, s.gateway, 1).reject, Reject::WrongType);
  WireMessage other = req;
  other.swarm_id = kSwarm + 1;
  EXPECT_EQ(node_handle_request(other, s.nodes[0], trace).reject, Reject::WrongAddress);
  const NodeReply reply = node_handle_request(req, s.nodes[0], trace);
  ASSERT_TRUE(reply.resp);
  EXPECT_EQ(gateway_handle_response(*reply.resp, s.gateway, 1).reject, Reject::None);
  EXPECT_EQ(gateway_handle_response(*reply.resp, s.gateway, 2).reject, Reject::Replay);
}

TEST(Protocol, RoundsAreDeterministic) {
  auto run = [] {
    TransportPolicy p = policy_of({rule(PolicyAction::Drop, MsgType::Resp, {}, {})});
    p.rules[0].probability = 0.3;
    p.seed = 11;
    Fixture f(p);
    std::vector<std::string> lines;
    for (int k = 0; k < 5; ++k)
      for (const auto& e : f.next().events) lines.push_back(format_event(e));
    return lines;
  };
  EXPECT_EQ(run(), run());
}

TEST(Policy, JsonRoundTrip) {
  const std::string text = R"({"seed": 3, "latency": 2, "rules": [
    {"match": {"msg_type": "RESP", "node": 1, "round": 4}, "action": "delay", "ticks": 5},
    {"match": {}, "action": "flip_bit", "bit": 17, "probability": 0.5}]})";
  const TransportPolicy p = parse_policy(text);
  EXPECT_EQ(p.seed, 3u);
  EXPECT_EQ(p.latency, 2);
  ASSERT_EQ(p.rules.size(), 2u);
  EXPECT_EQ(p.rules[0].msg_type, MsgType::Resp);
  EXPECT_EQ(p.rules[0].node, NodeId{1});
  EXPECT_EQ(p.rules[0].round, 4u);
  EXPECT_EQ(p.rules[0].ticks, 5);
  EXPECT_FALSE(p.rules[1].msg_type.has_value());
  EXPECT_EQ(p.rules[1].bit, 17u);
  const TransportPolicy q = parse_policy(dump_policy(p));
  EXPECT_EQ(dump_policy(q), dump_policy(p));
}

TEST(Policy, InvalidDocumentsAreRejected) {
  EXPECT_THROW(parse_policy("{"), FormatError);
  EXPECT_THROW(parse_policy(R"({"rules": [{"action": "explode"}]})"), FormatError);
  EXPECT_THROW(parse_policy(R"({"rules": [{"match": {"msg_type": "PING"}, "action": "drop"}]})"), FormatError);
  EXPECT_THROW(parse_policy(R"({"latency": 0})"), FormatError);
  EXPECT_THROW(parse_policy(R"({"rules": [{"action": "drop", "probability": 2}]})"), FormatError);
}
