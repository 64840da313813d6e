#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace swarmnet {

using Bytes = std::vector<std::uint8_t>;
using Key16 = std::array<std::uint8_t, 16>;
using Block16 = std::array<std::uint8_t, 16>;
using Digest32 = std::array<std::uint8_t, 32>;

/// AES-128 in counter mode; the IV is the initial 128-bit big-endian counter.
/// Encryption and decryption are the same operation.
Bytes aes128_ctr(const Key16& key, const Block16& iv, std::span<const std::uint8_t> data);

Digest32 hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> data);
Digest32 sha256(std::span<const std::uint8_t> data);

/// Comparison whose running time does not depend on where the inputs differ.
bool constant_time_equal(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

}  // namespace swarmnet
