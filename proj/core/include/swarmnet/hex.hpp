#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace swarmnet {

/// Lowercase, two characters per byte.
std::string hex_encode(std::span<const std::uint8_t> bytes);

/// Accepts either case; throws FormatError on odd length or a non-hex digit.
std::vector<std::uint8_t> hex_decode(std::string_view text);

}  // namespace swarmnet
