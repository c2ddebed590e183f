#include <gtest/gtest.h>

#include <random>

#include "adx/smslink/codec.hpp"
#include "support/fixtures.hpp"

using namespace adx;
using namespace adx::smslink;
using adx::testing::make_encounter;

TEST(Varint, RoundTripAndCanonical) {
  ByteWriter w;
  const std::uint64_t values[] = {0, 1, 127, 128, 300, 16383, 16384, ~0ull};
  for (auto v : values) w.varint(v);
  w.svarint(-1);
  w.svarint(std::numeric_limits<std::int64_t>::min());
  const auto bytes = w.take();
  ByteReader r(bytes);
  for (auto v : values) EXPECT_EQ(r.varint(), v);
  EXPECT_EQ(r.svarint(), -1);
  EXPECT_EQ(r.svarint(), std::numeric_limits<std::int64_t>::min());
  const std::vector<std::uint8_t> padded{0x80, 0x00};  // zero with a redundant byte
  ByteReader bad(padded);
  EXPECT_THROW(bad.varint(), DecodeError);
}

TEST(Codec, AckIsTenBytes) {
  const MessageId id{1, 2, 3, 4, 5, 6, 7, 8};
  const auto bytes = encode_ack(AckPayload{id});
  EXPECT_EQ(bytes.size(), 10u);
  EXPECT_EQ(bytes.front(), static_cast<std::uint8_t>(EnvelopeKind::ack));
  EXPECT_EQ(bytes.back(), 0x00);
  EXPECT_EQ(decode_ack(bytes).acked, id);
}

TEST(Codec, EmptyInputIsDecodeError) {
  const EnvelopeCodec codec(adx::testing::clinic_kb());
  EXPECT_THROW(codec.decode({}), DecodeError);
  EXPECT_THROW(peek_kind({}), DecodeError);
}

TEST(Codec, EncounterRoundTrip) {
  const auto kb = adx::testing::clinic_kb();
  const EnvelopeCodec codec(kb);
  std::mt19937_64 rng(9);
  for (std::uint64_t i = 0; i < 300; ++i) {
    auto e = make_encounter(*kb, Uuid::random(), rng() % 20, i);
    if (i % 4 == 0) {
      e.accepted_suggestion_rank.reset();
      e.provider_diagnosis = ProviderDiagnosis::free_text(i % 8 ? "local fever" : "");
    }
    if (i % 5 == 0) e.started_at = -static_cast<Timestamp>(i);
    const auto bytes = codec.encode(e);
    const auto back = codec.decode(bytes);
    ASSERT_TRUE(std::holds_alternative<EncounterRecord>(back));
    EXPECT_EQ(std::get<EncounterRecord>(back), e) << "case " << i;
    EXPECT_EQ(codec.encode(std::get<EncounterRecord>(back)), bytes);
  }
}

TEST(Codec, TypicalEncounterFitsOneSegment) {
  for (const auto& kb : {adx::testing::clinic_kb(), adx::testing::sample_kb()}) {
    const EnvelopeCodec codec(kb);
    const auto e = make_encounter(*kb, Uuid::random(), 8, 42);
    EXPECT_LE(codec.encode(e).size(), 120u);
  }
}

TEST(Codec, RequestAndDeltaRoundTrip) {
  const auto kb = adx::testing::clinic_kb();
  const EnvelopeCodec codec(kb);
  const ParamsRequestPayload req{17};
  EXPECT_EQ(std::get<ParamsRequestPayload>(codec.decode(codec.encode(req))), req);

  auto p = learner::ModelParams::from_knowledge_base(*kb);
  learner::ConfirmedEncounter enc{Uuid::random(), {{"s_fever", Answer::yes}, {"s_cough", Answer::no}},
                                  "d_malaria"};
  const auto q = learner::update_from_encounter(p, enc);
  const auto delta = learner::diff_params(p, q);
  EXPECT_EQ(std::get<learner::ParamDelta>(codec.decode(codec.encode(delta))), delta);
}

TEST(Codec, RejectsUnknownIdsAndMalformedBytes) {
  const auto kb = adx::testing::clinic_kb();
  const EnvelopeCodec codec(kb);
  auto e = make_encounter(*kb, Uuid::random(), 5, 1);
  auto bad = e;
  bad.answers["not_a_finding"] = Answer::yes;
  EXPECT_THROW(codec.encode(bad), EncodeError);

  const auto bytes = codec.encode(e);
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    const std::vector<std::uint8_t> prefix(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_THROW(codec.decode(prefix), DecodeError) << "cut " << cut;
  }
  auto trailing = bytes;
  trailing.push_back(0x00);
  EXPECT_THROW(codec.decode(trailing), DecodeError);
  auto wrong_kind = bytes;
  wrong_kind[0] = 0x7f;
  EXPECT_THROW(codec.decode(wrong_kind), DecodeError);
}
