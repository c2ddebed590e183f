#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "adx/smslink/channel.hpp"
#include "adx/smslink/segment.hpp"
#include "adx/smslink/varint.hpp"

using namespace adx::smslink;

namespace {

Ciphertext plain(std::vector<std::uint8_t> bytes, std::uint32_t offset = 0) {
  Ciphertext c;
  c.pad_id = "p";
  c.offset = offset;
  c.bytes = std::move(bytes);
  return c;
}

std::vector<std::uint8_t> counting(std::size_t n) {
  std::vector<std::uint8_t> v(n);
  std::iota(v.begin(), v.end(), std::uint8_t{0});
  return v;
}

adx::MessageId mid(std::uint8_t b) {
  adx::MessageId m{};
  m.fill(b);
  return m;
}

}  // namespace

TEST(Segment, SplitsAtCapacity) {
  const auto msg = counting(300);
  const auto segs = segment_message(plain(msg, 1000), msg, mid(1), ChannelConfig{});
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].payload.size(), 120u);
  EXPECT_EQ(segs[1].payload.size(), 120u);
  EXPECT_EQ(segs[2].payload.size(), 60u);
  EXPECT_EQ(segs[1].pad_offset, 1120u);
  for (const auto& s : segs) EXPECT_EQ(s.total, 3);
}

TEST(Segment, ReassemblesInAnyOrderWithDuplicates) {
  const auto msg = counting(300);
  auto segs = segment_message(plain(msg), msg, mid(2), ChannelConfig{});
  std::reverse(segs.begin(), segs.end());
  segs.insert(segs.begin() + 1, segs[0]);
  Reassembler r;
  std::vector<Reassembler::Status> statuses;
  std::vector<std::uint8_t> out;
  for (const auto& s : segs) {
    auto res = r.add(s);
    statuses.push_back(res.status);
    if (res.status == Reassembler::Status::complete) out = res.message;
  }
  EXPECT_EQ(out, msg);
  EXPECT_EQ(statuses[1], Reassembler::Status::duplicate);
  EXPECT_EQ(statuses[3], Reassembler::Status::complete);
  EXPECT_EQ(r.pending_messages(), 0u);
}

TEST(Segment, DropsBadChecksum) {
  const auto msg = counting(10);
  auto segs = segment_message(plain(msg), msg, mid(3), ChannelConfig{});
  segs[0].payload[0] ^= 1;
  Reassembler r;
  EXPECT_EQ(r.add(segs[0]).status, Reassembler::Status::dropped);
}

TEST(Segment, ConflictingRepeatIsAnIntegrityError) {
  const auto msg = counting(200);
  auto segs = segment_message(plain(msg), msg, mid(4), ChannelConfig{});
  Reassembler r;
  r.add(segs[0]);
  auto other = segs[0];
  other.payload[5] ^= 0xff;
  other.crc = crc32_of(other.payload);
  EXPECT_THROW(r.add(other), IntegrityError);
}

TEST(Segment, TextRoundTrip) {
  const auto msg = counting(130);
  for (const auto& s : segment_message(plain(msg, 77), msg, mid(5), ChannelConfig{})) {
    const auto text = encode_text(s);
    EXPECT_EQ(text.substr(0, 2), "M|");
    EXPECT_EQ(decode_text(text), s);
  }
}

TEST(Segment, MalformedTextIsRejected) {
  const auto msg = counting(5);
  const auto good = encode_text(segment_message(plain(msg), msg, mid(6), ChannelConfig{})[0]);
  EXPECT_THROW(decode_text(""), DecodeError);
  EXPECT_THROW(decode_text("hello"), DecodeError);
  EXPECT_THROW(decode_text("X" + good.substr(1)), DecodeError);
  EXPECT_THROW(decode_text(good.substr(0, 6)), DecodeError);
  EXPECT_THROW(decode_text(good + "|x"), DecodeError);
  EXPECT_THROW(decode_text("M|!!!!|AAAA"), DecodeError);
}

TEST(Segment, ConfigValidation) {
  ChannelConfig c;
  c.segment_capacity = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ChannelConfig{};
  c.max_retries = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Channel, NoFaultsIsFifo) {
  SimulatedChannel ch(ChannelFaults{});
  for (int i = 0; i < 10; ++i) ch.send(std::to_string(i));
  const auto got = ch.drain();
  ASSERT_EQ(got.size(), 10u);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(got[i], std::to_string(i));
}

TEST(Channel, TotalLossDeliversNothing) {
  SimulatedChannel ch(ChannelFaults{1.0, 0.0, 0, 3});
  for (int i = 0; i < 10; ++i) ch.send("x");
  EXPECT_TRUE(ch.drain().empty());
}

TEST(Channel, ReorderIsBounded) {
  const std::size_t window = 4;
  SimulatedChannel ch(ChannelFaults{0.0, 0.0, window, 11});
  const int n = 2000;
  for (int i = 0; i < n; ++i) ch.send(std::to_string(i));
  const auto got = ch.drain();
  ASSERT_EQ(got.size(), static_cast<std::size_t>(n));
  bool moved = false;
  for (int pos = 0; pos < n; ++pos) {
    const int v = std::stoi(got[pos]);
    int overtaken_by = 0;
    for (int q = 0; q < pos; ++q) overtaken_by += std::stoi(got[q]) > v;
    EXPECT_LE(overtaken_by, static_cast<int>(window));
    moved |= v != pos;
  }
  EXPECT_TRUE(moved);
}

TEST(Channel, SeededTraceIsDeterministic) {
  auto run = [] {
    SimulatedChannel ch(ChannelFaults{0.2, 0.1, 3, 42});
    for (int i = 0; i < 200; ++i) {
      ch.send(std::to_string(i));
      if (i % 7 == 0) ch.receive();
    }
    ch.drain();
    return ch.trace();
  };
  const auto a = run();
  EXPECT_EQ(a, run());
  const auto drops = std::count_if(a.begin(), a.end(), [](const auto& t) {
    return t.event == SimulatedChannel::Event::dropped;
  });
  EXPECT_GT(drops, 20);
  EXPECT_LT(drops, 70);
}

TEST(Channel, NetworkRoutesBetweenEndpoints) {
  SimulatedSmsNetwork net(ChannelFaults{});
  std::vector<std::pair<std::string, std::string>> at_b;
  net.endpoint("b").on_text([&](const std::string& from, const std::string& t) { at_b.emplace_back(from, t); });
  net.endpoint("a").send_text("b", "hi");
  EXPECT_TRUE(at_b.empty());
  EXPECT_EQ(net.pump(), 1u);
  ASSERT_EQ(at_b.size(), 1u);
  EXPECT_EQ(at_b[0], (std::pair<std::string, std::string>{"a", "hi"}));
}

TEST(Channel, FaultValidation) {
  EXPECT_THROW((ChannelFaults{1.5, 0, 0, 0}.validate()), std::invalid_argument);
  EXPECT_THROW((ChannelFaults{0, -0.1, 0, 0}.validate()), std::invalid_argument);
}
