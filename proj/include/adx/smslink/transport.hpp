#pragma once

// Reliable envelope delivery over an unreliable text channel.
//
// The transport is a single-threaded state machine fed three kinds of event:
// send(), on_text() and on_timer(). The caller owns the clock and the event
// ordering; nothing here blocks or reads wall time.
//
// Each outgoing message is encrypted as a whole with a fresh pad reservation
// and split into segments. Unacked messages are resent after ack_timeout with
// the same msg_id but new pad bytes, up to max_retries times, after which they
// move to the dead-letter list. The receiver delivers each msg_id once and
// answers every completed message (including repeats) with an ack envelope.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "adx/common/message_id.hpp"
#include "adx/smslink/otp.hpp"
#include "adx/smslink/segment.hpp"

namespace adx::store {
class LocalStore;
}

namespace adx::smslink {

using TimePoint = std::chrono::milliseconds;

// Remembers which msg_ids were handed to the application.
class DeliveryLog {
 public:
  virtual ~DeliveryLog() = default;
  virtual bool contains(const MessageId& id) const = 0;
  virtual void record(const MessageId& id) = 0;
};

class MemoryDeliveryLog : public DeliveryLog {
 public:
  bool contains(const MessageId& id) const override { return ids_.contains(id); }
  void record(const MessageId& id) override { ids_.insert(id); }

 private:
  std::set<MessageId> ids_;
};

// Backed by the terminal's local store.
class StoreDeliveryLog : public DeliveryLog {
 public:
  explicit StoreDeliveryLog(store::LocalStore& store) : store_(store) {}
  bool contains(const MessageId& id) const override;
  void record(const MessageId& id) override;

 private:
  store::LocalStore& store_;
};

// Append-only file of delivered ids, for processes without a LocalStore.
class FileDeliveryLog : public DeliveryLog {
 public:
  explicit FileDeliveryLog(std::filesystem::path path);
  ~FileDeliveryLog() override;
  bool contains(const MessageId& id) const override { return ids_.contains(id); }
  void record(const MessageId& id) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::set<MessageId> ids_;
};

struct DeadLetter {
  MessageId msg_id{};
  std::vector<std::uint8_t> envelope;
  int attempts = 0;
  std::string reason;
};

struct TransportStats {
  std::uint64_t messages_sent = 0;
  std::uint64_t transmissions = 0;
  std::uint64_t segments_sent = 0;
  std::uint64_t acks_sent = 0;
  std::uint64_t acks_received = 0;
  std::uint64_t delivered = 0;
  std::uint64_t duplicates_suppressed = 0;
  std::uint64_t segments_rejected = 0;
  std::uint64_t handler_failures = 0;
  std::uint64_t dead_lettered = 0;
};

class Transport {
 public:
  struct Callbacks {
    // Hands one SMS body to the gateway.
    std::function<void(const std::string& text)> emit;
    // A new envelope arrived. Exceptions are counted and the message is still
    // acked, since resending it would fail the same way.
    std::function<void(const MessageId&, std::span<const std::uint8_t> envelope)> deliver;
    std::function<void(const MessageId&)> acked;
    std::function<void(const DeadLetter&)> dead_letter;
  };

  Transport(PadBook& pads, ChannelConfig config, Callbacks callbacks,
            DeliveryLog* delivery_log = nullptr);

  // Queues an envelope and transmits it. Throws PadExhaustedError (and halts
  // further sends) when the pads cannot cover it.
  MessageId send(std::vector<std::uint8_t> envelope, TimePoint now);
  void on_text(std::string_view text, TimePoint now);
  void on_timer(TimePoint now);

  std::optional<TimePoint> next_deadline() const;
  std::size_t in_flight() const { return outgoing_.size(); }
  bool awaiting(const MessageId& id) const { return outgoing_.contains(id); }
  const std::vector<DeadLetter>& dead_letters() const { return dead_letters_; }
  const TransportStats& stats() const { return stats_; }
  // Empty while healthy; otherwise a short description for operators.
  const std::string& halted_reason() const { return halted_; }
  const ChannelConfig& config() const { return config_; }

 private:
  struct Outgoing {
    std::vector<std::uint8_t> envelope;
    int attempts = 0;
    TimePoint deadline{};
  };
  struct Completed {
    TimePoint last_ack{};
  };

  void transmit(const MessageId& id, std::span<const std::uint8_t> envelope);
  void send_ack(const MessageId& id, Completed& done, TimePoint now, bool force);
  void handle_message(const MessageId& id, std::vector<std::uint8_t> message, TimePoint now);

  PadBook& pads_;
  ChannelConfig config_;
  Callbacks cb_;
  DeliveryLog* delivery_log_;
  MemoryDeliveryLog memory_log_;
  Reassembler reassembler_;
  std::map<MessageId, Outgoing> outgoing_;
  std::map<MessageId, Completed> completed_;
  std::vector<DeadLetter> dead_letters_;
  TransportStats stats_;
  std::string halted_;
};

}  // namespace adx::smslink
