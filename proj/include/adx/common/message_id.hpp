#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace adx {

// 8-byte random identifier of one sync message.
using MessageId = std::array<std::uint8_t, 8>;

MessageId random_message_id();
std::string to_hex(const MessageId& id);

}  // namespace adx
