#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adx/common/message_id.hpp"
#include "adx/smslink/otp.hpp"

namespace adx::smslink {

class IntegrityError : public Error {
 public:
  using Error::Error;
};

struct ChannelConfig {
  std::size_t segment_capacity = 120;
  std::chrono::milliseconds ack_timeout{30'000};
  int max_retries = 5;

  // Throws std::invalid_argument.
  void validate() const;
};

struct Segment {
  MessageId msg_id{};
  std::uint16_t seq = 0;
  std::uint16_t total = 1;
  std::string pad_id;
  std::uint32_t pad_offset = 0;
  std::vector<std::uint8_t> payload;
  // CRC-32 of the plaintext this payload decrypts to.
  std::uint32_t crc = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

// Splits an encrypted message into ceil(len / capacity) segments. The
// plaintext is needed only for the per-segment checksums.
std::vector<Segment> segment_message(const Ciphertext& ciphertext,
                                     std::span<const std::uint8_t> plaintext,
                                     const MessageId& msg_id, const ChannelConfig& config);

// Collects segments per msg_id until a message is complete. Segments whose
// checksum fails are dropped; repeated segments with the same plaintext are
// ignored; a repeat whose plaintext differs raises IntegrityError.
class Reassembler {
 public:
  // Without pads, payloads are taken to be plaintext.
  explicit Reassembler(const PadBook* pads = nullptr) : pads_(pads) {}

  enum class Status { incomplete, complete, dropped, duplicate };
  struct Result {
    Status status = Status::incomplete;
    std::vector<std::uint8_t> message;
  };

  Result add(const Segment& segment);
  void forget(const MessageId& msg_id) { partial_.erase(msg_id); }
  std::size_t pending_messages() const { return partial_.size(); }

 private:
  struct Partial {
    std::uint16_t total = 0;
    std::map<std::uint16_t, std::vector<std::uint8_t>> chunks;
  };

  std::optional<std::vector<std::uint8_t>> open(const Segment& segment) const;

  const PadBook* pads_;
  std::map<MessageId, Partial> partial_;
};

// Convenience over Reassembler for a set of plaintext segments of one
// message; empty when the set is incomplete.
std::optional<std::vector<std::uint8_t>> reassemble(std::span<const Segment> segments);

// Text-safe SMS body: "M|" base64(header) "|" base64(payload), where the
// header is
//   msg_id[8] seq:u16be total:u16be pad_id_len:u8 pad_id[len]
//   pad_offset:u32be crc:u32be
// Base64 is the standard alphabet with padding.
std::string encode_text(const Segment& segment);
// Throws DecodeError on anything that is not exactly that shape.
Segment decode_text(std::string_view text);

}  // namespace adx::smslink
