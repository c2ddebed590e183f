#include "adx/smslink/segment.hpp"

#include <zlib.h>

#include <stdexcept>

namespace adx::smslink {

void ChannelConfig::validate() const {
  if (segment_capacity < 16) throw std::invalid_argument("segment_capacity must be >= 16");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (ack_timeout.count() <= 0) throw std::invalid_argument("ack_timeout must be positive");
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  if (!bytes.empty()) crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::vector<Segment> segment_message(const Ciphertext& ciphertext,
                                     std::span<const std::uint8_t> plaintext,
                                     const MessageId& msg_id, const ChannelConfig& config) {
  config.validate();
  if (ciphertext.bytes.empty()) throw std::invalid_argument("cannot segment an empty message");
  if (plaintext.size() != ciphertext.bytes.size())
    throw std::invalid_argument("plaintext and ciphertext lengths differ");
  const std::size_t cap = config.segment_capacity;
  const std::size_t total = (ciphertext.bytes.size() + cap - 1) / cap;
  if (total > 0xFFFF) throw std::invalid_argument("message needs more than 65535 segments");
  if (ciphertext.offset + ciphertext.bytes.size() > 0xFFFFFFFFull)
    throw std::invalid_argument("pad offset exceeds 32 bits");

  std::vector<Segment> out;
  out.reserve(total);
  for (std::size_t seq = 0; seq < total; ++seq) {
    const std::size_t begin = seq * cap;
    const std::size_t len = std::min(cap, ciphertext.bytes.size() - begin);
    Segment s;
    s.msg_id = msg_id;
    s.seq = static_cast<std::uint16_t>(seq);
    s.total = static_cast<std::uint16_t>(total);
    s.pad_id = ciphertext.pad_id;
    s.pad_offset = static_cast<std::uint32_t>(ciphertext.offset + begin);
    s.payload.assign(ciphertext.bytes.begin() + static_cast<std::ptrdiff_t>(begin),
                     ciphertext.bytes.begin() + static_cast<std::ptrdiff_t>(begin + len));
    s.crc = crc32_of(plaintext.subspan(begin, len));
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<std::vector<std::uint8_t>> Reassembler::open(const Segment& segment) const {
  std::vector<std::uint8_t> plain;
  if (pads_) {
    const PadFile* pad = pads_->find(segment.pad_id);
    if (!pad) return std::nullopt;
    try {
      plain = otp_decrypt(*pad, segment.payload, segment.pad_offset);
    } catch (const PadError&) {
      return std::nullopt;
    }
  } else {
    plain = segment.payload;
  }
  if (crc32_of(plain) != segment.crc) return std::nullopt;
  return plain;
}

Reassembler::Result Reassembler::add(const Segment& segment) {
  if (segment.total == 0 || segment.seq >= segment.total) return {Status::dropped, {}};
  auto plain = open(segment);
  if (!plain) return {Status::dropped, {}};

  auto& partial = partial_[segment.msg_id];
  if (partial.total == 0) partial.total = segment.total;
  if (partial.total != segment.total)
    throw IntegrityError("segment total changed for message " + to_hex(segment.msg_id));
  auto [it, inserted] = partial.chunks.emplace(segment.seq, std::move(*plain));
  if (!inserted) {
    if (it->second != open(segment).value())
      throw IntegrityError("conflicting duplicate of segment " + std::to_string(segment.seq) +
                           " for message " + to_hex(segment.msg_id));
    return {Status::duplicate, {}};
  }
  if (partial.chunks.size() < partial.total) return {Status::incomplete, {}};

  Result done{Status::complete, {}};
  for (const auto& [seq, chunk] : partial.chunks)
    done.message.insert(done.message.end(), chunk.begin(), chunk.end());
  partial_.erase(segment.msg_id);
  return done;
}

std::optional<std::vector<std::uint8_t>> reassemble(std::span<const Segment> segments) {
  Reassembler r;
  for (const auto& s : segments) {
    auto result = r.add(s);
    if (result.status == Reassembler::Status::complete) return std::move(result.message);
  }
  return std::nullopt;
}

}  // namespace adx::smslink
