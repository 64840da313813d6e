#include "swarmnet/wire.hpp"

#include <algorithm>

#include "swarmnet/error.hpp"

namespace swarmnet {

std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::Req: return "REQ";
    case MsgType::Resp: return "RESP";
    case MsgType::Update: return "UPDATE";
  }
  return "?";
}

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

}  // namespace

Bytes mac_input(const WireMessage& msg) {
  if (msg.payload.size() > kMaxPayload) throw ValidationError("payload exceeds 65535 bytes");
  Bytes out;
  out.reserve(kWireHeaderBytes + msg.payload.size());
  out.push_back(static_cast<std::uint8_t>(msg.type));
  put_u16(out, msg.swarm_id);
  put_u16(out, msg.node_id);
  out.insert(out.end(), msg.iv.begin(), msg.iv.end());
  put_u16(out, static_cast<std::uint16_t>(msg.payload.size()));
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  return out;
}

Bytes encode(const WireMessage& msg) {
  Bytes out = mac_input(msg);
  out.insert(out.end(), msg.mac.begin(), msg.mac.end());
  return out;
}

WireMessage decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kWireHeaderBytes + kWireMacBytes) throw FormatError("wire message truncated");
  const std::uint8_t type = bytes[0];
  if (type < 1 || type > 3) throw FormatError("unknown message type " + std::to_string(type));
  WireMessage msg;
  msg.type = static_cast<MsgType>(type);
  msg.swarm_id = get_u16(&bytes[1]);
  msg.node_id = get_u16(&bytes[3]);
  std::copy_n(&bytes[5], 16, msg.iv.begin());
  const std::size_t len = get_u16(&bytes[21]);
  if (bytes.size() != kWireHeaderBytes + len + kWireMacBytes)
    throw FormatError("payload_len " + std::to_string(len) + " disagrees with message size " +
                      std::to_string(bytes.size()));
  msg.payload.assign(bytes.begin() + kWireHeaderBytes, bytes.begin() + static_cast<std::ptrdiff_t>(kWireHeaderBytes + len));
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(kWireHeaderBytes + len), kWireMacBytes, msg.mac.begin());
  return msg;
}

}  // namespace swarmnet
