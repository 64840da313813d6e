#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "swarmnet/crypto.hpp"

namespace swarmnet {

enum class MsgType : std::uint8_t { Req = 1, Resp = 2, Update = 3 };

std::string_view to_string(MsgType t);

/// On-wire layout, all integers big-endian:
///   type u8 | swarm_id u16 | node_id u16 | iv[16] | payload_len u16 | payload | mac[32]
struct WireMessage {
  MsgType type = MsgType::Req;
  std::uint16_t swarm_id = 0;
  std::uint16_t node_id = 0;
  Block16 iv{};
  Bytes payload;
  Digest32 mac{};

  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

inline constexpr std::size_t kWireHeaderBytes = 1 + 2 + 2 + 16 + 2;
inline constexpr std::size_t kWireMacBytes = 32;
inline constexpr std::size_t kMaxPayload = 0xFFFF;

/// Every field before the mac, as it appears on the wire.
Bytes mac_input(const WireMessage& msg);

Bytes encode(const WireMessage& msg);

/// Throws FormatError on truncation, trailing bytes, an unknown type or a
/// length field that disagrees with the buffer.
WireMessage decode(std::span<const std::uint8_t> bytes);

}  // namespace swarmnet
