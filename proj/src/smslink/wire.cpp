#include <sodium.h>

#include "adx/smslink/segment.hpp"
#include "adx/smslink/varint.hpp"

namespace adx::smslink {

namespace {

constexpr int kVariant = sodium_base64_VARIANT_ORIGINAL;

std::string to_base64(std::span<const std::uint8_t> bytes) {
  std::string out(sodium_base64_encoded_len(bytes.size(), kVariant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), kVariant);
  out.resize(out.size() - 1);  // trailing NUL
  return out;
}

std::vector<std::uint8_t> from_base64(std::string_view text, std::size_t at) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &len, &end,
                        kVariant) != 0 ||
      end != text.data() + text.size())
    throw DecodeError("invalid base64", at);
  out.resize(len);
  return out;
}

}  // namespace

std::string encode_text(const Segment& segment) {
  ByteWriter h;
  h.raw(segment.msg_id);
  h.u16_be(segment.seq);
  h.u16_be(segment.total);
  if (segment.pad_id.empty() || segment.pad_id.size() > 255)
    throw EncodeError("pad id length must be 1..255");
  h.u8(static_cast<std::uint8_t>(segment.pad_id.size()));
  h.raw(std::span(reinterpret_cast<const std::uint8_t*>(segment.pad_id.data()), segment.pad_id.size()));
  h.u32_be(segment.pad_offset);
  h.u32_be(segment.crc);
  const auto header = h.take();
  return "M|" + to_base64(header) + "|" + to_base64(segment.payload);
}

Segment decode_text(std::string_view text) {
  if (text.size() < 2 || text.substr(0, 2) != "M|") throw DecodeError("missing 'M|' prefix", 0);
  const auto bar = text.find('|', 2);
  if (bar == std::string_view::npos) throw DecodeError("missing payload separator", text.size());
  const auto header = from_base64(text.substr(2, bar - 2), 2);
  const auto payload_text = text.substr(bar + 1);
  if (payload_text.empty()) throw DecodeError("empty payload", bar + 1);
  auto payload = from_base64(payload_text, bar + 1);

  ByteReader r(header);
  Segment s;
  auto id = r.raw(s.msg_id.size());
  std::copy(id.begin(), id.end(), s.msg_id.begin());
  s.seq = r.u16_be();
  s.total = r.u16_be();
  const std::uint8_t pad_len = r.u8();
  if (pad_len == 0) throw DecodeError("empty pad id", r.offset());
  auto pad = r.raw(pad_len);
  s.pad_id.assign(pad.begin(), pad.end());
  s.pad_offset = r.u32_be();
  s.crc = r.u32_be();
  if (!r.at_end()) throw DecodeError("trailing header bytes", r.offset());
  if (s.total == 0 || s.seq >= s.total) throw DecodeError("seq/total out of range", 8);
  s.payload = std::move(payload);
  return s;
}

}  // namespace adx::smslink
