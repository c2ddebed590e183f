#include "adx/smslink/varint.hpp"

#include <bit>
#include <cstring>

namespace adx::smslink {

void ByteWriter::varint(std::uint64_t v) {
  while (v >= 0x80) {
    out_.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::svarint(std::int64_t v) {
  varint((static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63));
}

void ByteWriter::u16_be(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32_be(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::f64_le(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

void ByteWriter::raw(std::span<const std::uint8_t> bytes) {
  out_.insert(out_.end(), bytes.begin(), bytes.end());
}

void ByteWriter::bytes_with_length(std::string_view s) {
  varint(s.size());
  out_.insert(out_.end(), s.begin(), s.end());
}

void ByteReader::need(std::size_t n, const char* what) {
  if (remaining() < n) throw DecodeError(std::string("truncated input reading ") + what, pos_);
}

std::uint8_t ByteReader::u8() {
  need(1, "u8");
  return in_[pos_++];
}

std::uint64_t ByteReader::varint() {
  const std::size_t start = pos_;
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    need(1, "varint");
    const std::uint8_t b = in_[pos_++];
    if (shift == 63 && b > 1) throw DecodeError("varint overflow", start);
    v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
    if (!(b & 0x80)) {
      // Reject padded encodings so every value has one byte form.
      if (b == 0 && pos_ - start > 1) throw DecodeError("non-canonical varint", start);
      return v;
    }
  }
  throw DecodeError("varint overflow", start);
}

std::int64_t ByteReader::svarint() {
  const std::uint64_t u = varint();
  return static_cast<std::int64_t>((u >> 1) ^ (~(u & 1) + 1));
}

std::uint16_t ByteReader::u16_be() {
  need(2, "u16");
  const std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] << 8 | in_[pos_ + 1]);
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32_be() {
  need(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = v << 8 | in_[pos_ + i];
  pos_ += 4;
  return v;
}

double ByteReader::f64_le() {
  need(8, "f64");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return std::bit_cast<double>(bits);
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
  need(n, "bytes");
  auto out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::string ByteReader::bytes_with_length(std::size_t max_len) {
  const std::size_t start = pos_;
  const std::uint64_t n = varint();
  if (n > max_len) throw DecodeError("length prefix too large", start);
  auto b = raw(static_cast<std::size_t>(n));
  return std::string(b.begin(), b.end());
}

}  // namespace adx::smslink
