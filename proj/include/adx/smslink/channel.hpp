#pragma once

// Fault-injecting stand-in for an SMS link, and the gateway interface that a
// real modem driver would implement.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace adx::smslink {

struct ChannelFaults {
  double loss = 0.0;
  double duplicate = 0.0;
  // A message may be overtaken by at most this many later messages.
  std::size_t reorder_window = 0;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument for probabilities outside [0, 1].
  void validate() const;
};

class SimulatedChannel {
 public:
  enum class Event : std::uint8_t { sent, dropped, duplicated, delivered };
  struct TraceEntry {
    Event event;
    // Ordinal of the message in send order.
    std::uint64_t message;
    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
  };

  explicit SimulatedChannel(ChannelFaults faults);

  void send(std::string text);
  // Next message the far end receives, if any is in flight.
  std::optional<std::string> receive();
  std::vector<std::string> drain();
  std::size_t in_flight() const { return pending_.size(); }
  const std::vector<TraceEntry>& trace() const { return trace_; }

 private:
  struct Pending {
    std::uint64_t ordinal;
    std::string text;
    std::size_t overtaken = 0;
  };

  ChannelFaults faults_;
  std::mt19937_64 rng_;
  std::deque<Pending> pending_;
  std::uint64_t next_ordinal_ = 0;
  std::vector<TraceEntry> trace_;
};

class SmsGateway {
 public:
  using Handler = std::function<void(const std::string& from, const std::string& text)>;
  virtual ~SmsGateway() = default;
  virtual void send_text(const std::string& dest, const std::string& text) = 0;
  virtual void on_text(Handler handler) = 0;
};

// A set of named endpoints joined by one SimulatedChannel per direction.
// Nothing moves until pump() is called.
class SimulatedSmsNetwork {
 public:
  explicit SimulatedSmsNetwork(ChannelFaults faults);
  ~SimulatedSmsNetwork();
  SimulatedSmsNetwork(const SimulatedSmsNetwork&) = delete;
  SimulatedSmsNetwork& operator=(const SimulatedSmsNetwork&) = delete;

  // Gateway owned by the network; valid for the network's lifetime.
  SmsGateway& endpoint(const std::string& name);

  // Delivers everything currently in flight. Returns the number of texts
  // handed to handlers.
  std::size_t pump();
  std::size_t in_flight() const;
  std::uint64_t texts_sent() const { return texts_sent_; }

 private:
  class Endpoint;
  SimulatedChannel& link(const std::string& from, const std::string& to);

  ChannelFaults faults_;
  std::map<std::string, std::unique_ptr<Endpoint>> endpoints_;
  std::map<std::pair<std::string, std::string>, std::unique_ptr<SimulatedChannel>> links_;
  std::uint64_t texts_sent_ = 0;
};

}  // namespace adx::smslink
