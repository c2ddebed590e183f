#pragma once

// Canonical binary encoding of sync envelopes.
//
//   envelope := kind:u8 body 0x00
//
//   ack            (0x02): msg_id[8]
//   params_request (0x03): since_version:varint
//   encounter      (0x01): kb_version:varint encounter_id[16] patient_id[16]
//                          started_at:svarint params_version:varint
//                          n:varint { finding_index*3 + answer : varint }*n
//                          m:varint { disease_index:varint probability_bp:varint }*m
//                          dx_kind:u8 (0 catalog: disease_index:varint |
//                                      1 free text: len:varint utf8[len])
//                          accepted_rank:varint (0 = none)
//   params_delta   (0x04): kb_version:varint version:varint
//                          n:varint { disease_index:varint value:f64le }*n
//                          m:varint { finding_index:varint disease_index:varint value:f64le }*m
//
// Catalog ids travel as indices into the shared knowledge base, which both
// ends must hold at the same version. Answers are emitted in finding_id
// order, so equal records always encode to equal bytes.

#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "adx/common/message_id.hpp"
#include "adx/common/records.hpp"
#include "adx/knowledge/knowledge_base.hpp"
#include "adx/learner/learner.hpp"
#include "adx/smslink/varint.hpp"

namespace adx::smslink {

inline constexpr std::size_t kMaxEnvelopeBytes = 64 * 1024;

enum class EnvelopeKind : std::uint8_t {
  encounter = 1,
  ack = 2,
  params_request = 3,
  params_delta = 4,
};

struct AckPayload {
  MessageId acked{};
  friend bool operator==(const AckPayload&, const AckPayload&) = default;
};

struct ParamsRequestPayload {
  std::int64_t since_version = 0;
  friend bool operator==(const ParamsRequestPayload&, const ParamsRequestPayload&) = default;
};

using Payload =
    std::variant<EncounterRecord, AckPayload, ParamsRequestPayload, learner::ParamDelta>;

EnvelopeKind kind_of(const Payload& p);

// Reads only the tag byte. Throws DecodeError on empty input or unknown tag.
EnvelopeKind peek_kind(std::span<const std::uint8_t> bytes);

// Ack and params_request need no catalog.
std::vector<std::uint8_t> encode_ack(const AckPayload& ack);
AckPayload decode_ack(std::span<const std::uint8_t> bytes);

class EnvelopeCodec {
 public:
  explicit EnvelopeCodec(std::shared_ptr<const knowledge::KnowledgeBase> kb);

  // Throws EncodeError for ids outside the catalog or oversize output.
  std::vector<std::uint8_t> encode(const Payload& payload) const;
  // Throws DecodeError with the failing byte offset.
  Payload decode(std::span<const std::uint8_t> bytes) const;

 private:
  std::shared_ptr<const knowledge::KnowledgeBase> kb_;
};

}  // namespace adx::smslink
