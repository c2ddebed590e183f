#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adx/common/error.hpp"

namespace adx::smslink {

// Malformed input; offset() is the byte position where decoding failed.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  // Unsigned LEB128.
  void varint(std::uint64_t v);
  // Zigzag-mapped signed varint.
  void svarint(std::int64_t v);
  void u16_be(std::uint16_t v);
  void u32_be(std::uint32_t v);
  void f64_le(double v);
  void raw(std::span<const std::uint8_t> bytes);
  void bytes_with_length(std::string_view s);

  std::size_t size() const { return out_.size(); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8();
  std::uint64_t varint();
  std::int64_t svarint();
  std::uint16_t u16_be();
  std::uint32_t u32_be();
  double f64_le();
  std::span<const std::uint8_t> raw(std::size_t n);
  std::string bytes_with_length(std::size_t max_len);

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n, const char* what);

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace adx::smslink
