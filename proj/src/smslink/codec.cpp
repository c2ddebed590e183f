#include "adx/smslink/codec.hpp"

namespace adx::smslink {

namespace {

constexpr std::uint8_t kTerminator = 0x00;
constexpr std::size_t kMaxFreeText = 1024;

void finish(ByteWriter& w) { w.u8(kTerminator); }

void expect_end(ByteReader& r) {
  const std::size_t at = r.offset();
  if (r.u8() != kTerminator) throw DecodeError("missing terminator", at);
  if (!r.at_end()) throw DecodeError("trailing bytes after terminator", r.offset());
}

Uuid read_uuid(ByteReader& r) {
  Uuid::Bytes b;
  auto raw = r.raw(b.size());
  std::copy(raw.begin(), raw.end(), b.begin());
  return Uuid(b);
}

std::size_t index_within(ByteReader& r, std::size_t bound, const char* what) {
  const std::size_t at = r.offset();
  const std::uint64_t v = r.varint();
  if (v >= bound) throw DecodeError(std::string(what) + " index out of range", at);
  return static_cast<std::size_t>(v);
}

}  // namespace

EnvelopeKind kind_of(const Payload& p) {
  return std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EncounterRecord>) return EnvelopeKind::encounter;
        else if constexpr (std::is_same_v<T, AckPayload>) return EnvelopeKind::ack;
        else if constexpr (std::is_same_v<T, ParamsRequestPayload>) return EnvelopeKind::params_request;
        else return EnvelopeKind::params_delta;
      },
      p);
}

EnvelopeKind peek_kind(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw DecodeError("empty envelope", 0);
  const auto tag = bytes[0];
  if (tag < 1 || tag > 4) throw DecodeError("unknown envelope kind", 0);
  return static_cast<EnvelopeKind>(tag);
}

std::vector<std::uint8_t> encode_ack(const AckPayload& ack) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(EnvelopeKind::ack));
  w.raw(ack.acked);
  finish(w);
  return w.take();
}

AckPayload decode_ack(std::span<const std::uint8_t> bytes) {
  if (peek_kind(bytes) != EnvelopeKind::ack) throw DecodeError("not an ack envelope", 0);
  ByteReader r(bytes);
  r.u8();
  AckPayload ack;
  auto raw = r.raw(ack.acked.size());
  std::copy(raw.begin(), raw.end(), ack.acked.begin());
  expect_end(r);
  return ack;
}

EnvelopeCodec::EnvelopeCodec(std::shared_ptr<const knowledge::KnowledgeBase> kb)
    : kb_(std::move(kb)) {}

std::vector<std::uint8_t> EnvelopeCodec::encode(const Payload& payload) const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind_of(payload)));
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AckPayload>) {
          w.raw(v.acked);
        } else if constexpr (std::is_same_v<T, ParamsRequestPayload>) {
          if (v.since_version < 0) throw EncodeError("since_version must be >= 0");
          w.varint(static_cast<std::uint64_t>(v.since_version));
        } else if constexpr (std::is_same_v<T, EncounterRecord>) {
          if (v.params_version < 0) throw EncodeError("params_version must be >= 0");
          w.varint(static_cast<std::uint64_t>(kb_->version()));
          w.raw(v.encounter_id.bytes());
          w.raw(v.patient_id.bytes());
          w.svarint(v.started_at);
          w.varint(static_cast<std::uint64_t>(v.params_version));
          w.varint(v.answers.size());
          for (const auto& [id, answer] : v.answers) {
            const auto f = kb_->finding_index(id);
            if (!f) throw EncodeError("finding '" + id + "' is not in the catalog");
            w.varint(static_cast<std::uint64_t>(*f) * 3 + static_cast<std::uint8_t>(answer));
          }
          w.varint(v.suggestions_shown.size());
          for (const auto& s : v.suggestions_shown) {
            const auto d = kb_->disease_index(s.disease_id);
            if (!d) throw EncodeError("disease '" + s.disease_id + "' is not in the catalog");
            w.varint(*d);
            w.varint(s.probability_bp);
          }
          const auto& dx = v.provider_diagnosis;
          w.u8(static_cast<std::uint8_t>(dx.kind));
          if (dx.kind == ProviderDiagnosis::Kind::catalog) {
            const auto d = kb_->disease_index(dx.value);
            if (!d) throw EncodeError("diagnosis '" + dx.value + "' is not in the catalog");
            w.varint(*d);
          } else {
            if (dx.value.size() > kMaxFreeText) throw EncodeError("free-text diagnosis too long");
            w.bytes_with_length(dx.value);
          }
          w.varint(v.accepted_suggestion_rank ? static_cast<std::uint64_t>(*v.accepted_suggestion_rank) : 0);
        } else {
          if (v.version < 0) throw EncodeError("delta version must be >= 0");
          w.varint(static_cast<std::uint64_t>(kb_->version()));
          w.varint(static_cast<std::uint64_t>(v.version));
          w.varint(v.priors.size());
          for (const auto& e : v.priors) {
            w.varint(e.disease);
            w.f64_le(e.value);
          }
          w.varint(v.cond.size());
          for (const auto& e : v.cond) {
            w.varint(e.finding);
            w.varint(e.disease);
            w.f64_le(e.value);
          }
        }
      },
      payload);
  finish(w);
  if (w.size() > kMaxEnvelopeBytes) throw EncodeError("envelope exceeds 64 KiB");
  return w.take();
}

Payload EnvelopeCodec::decode(std::span<const std::uint8_t> bytes) const {
  if (bytes.size() > kMaxEnvelopeBytes) throw DecodeError("envelope exceeds 64 KiB", 0);
  const auto kind = peek_kind(bytes);
  ByteReader r(bytes);
  r.u8();
  const std::size_t nd = kb_->diseases().size();
  const std::size_t nf = kb_->findings().size();
  auto check_kb_version = [&] {
    const std::size_t at = r.offset();
    if (r.varint() != static_cast<std::uint64_t>(kb_->version()))
      throw DecodeError("knowledge-base version mismatch", at);
  };

  switch (kind) {
    case EnvelopeKind::ack: {
      AckPayload ack;
      auto raw = r.raw(ack.acked.size());
      std::copy(raw.begin(), raw.end(), ack.acked.begin());
      expect_end(r);
      return ack;
    }
    case EnvelopeKind::params_request: {
      ParamsRequestPayload req;
      req.since_version = static_cast<std::int64_t>(r.varint());
      expect_end(r);
      return req;
    }
    case EnvelopeKind::encounter: {
      check_kb_version();
      EncounterRecord e;
      e.encounter_id = read_uuid(r);
      e.patient_id = read_uuid(r);
      e.started_at = r.svarint();
      e.params_version = static_cast<std::int64_t>(r.varint());
      const std::size_t at_answers = r.offset();
      const std::uint64_t n = r.varint();
      if (n > nf) throw DecodeError("answer count exceeds catalog", at_answers);
      for (std::uint64_t i = 0; i < n; ++i) {
        const std::size_t at = r.offset();
        const std::uint64_t packed = r.varint();
        const std::uint64_t f = packed / 3;
        if (f >= nf) throw DecodeError("finding index out of range", at);
        const auto answer = static_cast<Answer>(packed % 3);
        if (!e.answers.emplace(kb_->findings()[f].finding_id, answer).second)
          throw DecodeError("duplicate finding in answers", at);
      }
      const std::size_t at_shown = r.offset();
      const std::uint64_t m = r.varint();
      if (m > nd) throw DecodeError("suggestion count exceeds catalog", at_shown);
      for (std::uint64_t i = 0; i < m; ++i) {
        ShownSuggestion s;
        s.disease_id = kb_->diseases()[index_within(r, nd, "disease")].disease_id;
        const std::size_t at = r.offset();
        const std::uint64_t bp = r.varint();
        if (bp > 10000) throw DecodeError("probability above 1", at);
        s.probability_bp = static_cast<std::uint16_t>(bp);
        e.suggestions_shown.push_back(std::move(s));
      }
      const std::size_t at_dx = r.offset();
      const std::uint8_t dx_kind = r.u8();
      if (dx_kind == 0) {
        e.provider_diagnosis =
            ProviderDiagnosis::catalog(kb_->diseases()[index_within(r, nd, "disease")].disease_id);
      } else if (dx_kind == 1) {
        e.provider_diagnosis = ProviderDiagnosis::free_text(r.bytes_with_length(kMaxFreeText));
      } else {
        throw DecodeError("unknown diagnosis kind", at_dx);
      }
      const std::size_t at_rank = r.offset();
      const std::uint64_t rank = r.varint();
      if (rank > 5) throw DecodeError("accepted rank out of range", at_rank);
      if (rank) e.accepted_suggestion_rank = static_cast<int>(rank);
      expect_end(r);
      return e;
    }
    case EnvelopeKind::params_delta: {
      check_kb_version();
      learner::ParamDelta delta;
      delta.version = static_cast<std::int64_t>(r.varint());
      const std::uint64_t n = r.varint();
      if (n > nd) throw DecodeError("prior count exceeds catalog", r.offset());
      for (std::uint64_t i = 0; i < n; ++i) {
        const auto d = static_cast<std::uint32_t>(index_within(r, nd, "disease"));
        delta.priors.push_back({d, r.f64_le()});
      }
      const std::uint64_t m = r.varint();
      if (m > nd * nf) throw DecodeError("cond count exceeds catalog", r.offset());
      for (std::uint64_t i = 0; i < m; ++i) {
        const auto f = static_cast<std::uint32_t>(index_within(r, nf, "finding"));
        const auto d = static_cast<std::uint32_t>(index_within(r, nd, "disease"));
        delta.cond.push_back({f, d, r.f64_le()});
      }
      expect_end(r);
      return delta;
    }
  }
  throw DecodeError("unknown envelope kind", 0);
}

}  // namespace adx::smslink
