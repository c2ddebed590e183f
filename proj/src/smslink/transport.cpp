#include "adx/smslink/transport.hpp"

#include "adx/smslink/codec.hpp"
#include "adx/store/local_store.hpp"
#include "adx/store/record_log.hpp"

namespace adx::smslink {

bool StoreDeliveryLog::contains(const MessageId& id) const { return store_.was_delivered(id); }
void StoreDeliveryLog::record(const MessageId& id) { store_.record_delivery(id); }

struct FileDeliveryLog::Impl {
  explicit Impl(std::filesystem::path path) : log(std::move(path)) {}
  store::RecordLog log;
};

FileDeliveryLog::FileDeliveryLog(std::filesystem::path path)
    : impl_(std::make_unique<Impl>(std::move(path))) {
  for (const auto& rec : impl_->log.recovered()) {
    if (rec.payload.size() != 8) continue;
    MessageId id;
    std::copy(rec.payload.begin(), rec.payload.end(), id.begin());
    ids_.insert(id);
  }
  impl_->log.release_recovered();
}

FileDeliveryLog::~FileDeliveryLog() = default;

void FileDeliveryLog::record(const MessageId& id) {
  if (ids_.contains(id)) return;
  impl_->log.append(1, id);
  ids_.insert(id);
}

Transport::Transport(PadBook& pads, ChannelConfig config, Callbacks callbacks,
                     DeliveryLog* delivery_log)
    : pads_(pads),
      config_(config),
      cb_(std::move(callbacks)),
      delivery_log_(delivery_log ? delivery_log : &memory_log_),
      reassembler_(&pads) {
  config_.validate();
}

void Transport::transmit(const MessageId& id, std::span<const std::uint8_t> envelope) {
  PadFile& pad = pads_.for_sending(envelope.size());
  const Ciphertext ct = otp_encrypt(pad, envelope);
  const auto segments = segment_message(ct, envelope, id, config_);
  ++stats_.transmissions;
  for (const auto& seg : segments) {
    ++stats_.segments_sent;
    if (cb_.emit) cb_.emit(encode_text(seg));
  }
}

MessageId Transport::send(std::vector<std::uint8_t> envelope, TimePoint now) {
  if (!halted_.empty()) throw PadExhaustedError("transport halted: " + halted_);
  const MessageId id = random_message_id();
  try {
    transmit(id, envelope);
  } catch (const PadExhaustedError& e) {
    halted_ = std::string("pad exhausted: ") + e.what();
    throw;
  }
  ++stats_.messages_sent;
  outgoing_[id] = Outgoing{std::move(envelope), 1, now + config_.ack_timeout};
  return id;
}

void Transport::send_ack(const MessageId& id, Completed& done, TimePoint now, bool force) {
  // Segments of one retransmission arrive together; answer them once.
  if (!force && now - done.last_ack < config_.ack_timeout / 2) return;
  done.last_ack = now;
  const auto ack = encode_ack(AckPayload{id});
  try {
    transmit(random_message_id(), ack);
    ++stats_.acks_sent;
  } catch (const PadExhaustedError& e) {
    halted_ = std::string("pad exhausted: ") + e.what();
  }
}

void Transport::handle_message(const MessageId& id, std::vector<std::uint8_t> message,
                               TimePoint now) {
  EnvelopeKind kind;
  try {
    kind = peek_kind(message);
  } catch (const DecodeError&) {
    ++stats_.handler_failures;
    return;
  }
  if (kind == EnvelopeKind::ack) {
    // Acks are fire-and-forget and never acked themselves.
    try {
      const AckPayload ack = decode_ack(message);
      ++stats_.acks_received;
      if (outgoing_.erase(ack.acked) > 0 && cb_.acked) cb_.acked(ack.acked);
    } catch (const DecodeError&) {
      ++stats_.handler_failures;
    }
    return;
  }

  auto& done = completed_[id];
  if (delivery_log_->contains(id)) {
    ++stats_.duplicates_suppressed;
  } else {
    // Deliver before recording: a crash in between redelivers, which the
    // application absorbs by record id, rather than acking something that
    // was never applied.
    try {
      if (cb_.deliver) cb_.deliver(id, message);
      ++stats_.delivered;
    } catch (const std::exception&) {
      ++stats_.handler_failures;
    }
    delivery_log_->record(id);
  }
  send_ack(id, done, now, true);
}

void Transport::on_text(std::string_view text, TimePoint now) {
  Segment seg;
  try {
    seg = decode_text(text);
  } catch (const DecodeError&) {
    ++stats_.segments_rejected;
    return;
  }
  if (auto it = completed_.find(seg.msg_id); it != completed_.end()) {
    // Sender did not hear our ack; say it again.
    ++stats_.duplicates_suppressed;
    send_ack(seg.msg_id, it->second, now, false);
    return;
  }
  Reassembler::Result r;
  try {
    r = reassembler_.add(seg);
  } catch (const IntegrityError&) {
    ++stats_.segments_rejected;
    reassembler_.forget(seg.msg_id);
    return;
  }
  switch (r.status) {
    case Reassembler::Status::dropped:
      ++stats_.segments_rejected;
      return;
    case Reassembler::Status::incomplete:
    case Reassembler::Status::duplicate:
      return;
    case Reassembler::Status::complete:
      handle_message(seg.msg_id, std::move(r.message), now);
      return;
  }
}

void Transport::on_timer(TimePoint now) {
  std::vector<MessageId> due;
  for (const auto& [id, out] : outgoing_)
    if (out.deadline <= now) due.push_back(id);
  for (const auto& id : due) {
    auto it = outgoing_.find(id);
    Outgoing& out = it->second;
    if (out.attempts > config_.max_retries) {
      DeadLetter dl{id, std::move(out.envelope), out.attempts, "no ack after retries"};
      outgoing_.erase(it);
      ++stats_.dead_lettered;
      dead_letters_.push_back(dl);
      if (cb_.dead_letter) cb_.dead_letter(dead_letters_.back());
      continue;
    }
    try {
      transmit(id, out.envelope);
    } catch (const PadExhaustedError& e) {
      halted_ = std::string("pad exhausted: ") + e.what();
      DeadLetter dl{id, std::move(out.envelope), out.attempts, halted_};
      outgoing_.erase(it);
      ++stats_.dead_lettered;
      dead_letters_.push_back(dl);
      if (cb_.dead_letter) cb_.dead_letter(dead_letters_.back());
      continue;
    }
    ++out.attempts;
    out.deadline = now + config_.ack_timeout;
  }
}

std::optional<TimePoint> Transport::next_deadline() const {
  std::optional<TimePoint> best;
  for (const auto& [id, out] : outgoing_)
    if (!best || out.deadline < *best) best = out.deadline;
  return best;
}

}  // namespace adx::smslink
