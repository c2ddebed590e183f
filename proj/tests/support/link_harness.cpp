#include "support/link_harness.hpp"

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>

#include "adx/smslink/codec.hpp"
#include "adx/smslink/otp.hpp"
#include "adx/smslink/transport.hpp"

namespace adx::testing {

using namespace smslink;

namespace {

struct Crash {};

// Byte ranges per pad; counts bytes that were already covered.
class Coverage {
 public:
  std::uint64_t add(const std::string& pad, std::uint64_t begin, std::uint64_t len) {
    auto& ranges = by_pad_[pad];
    std::uint64_t overlap = 0;
    const std::uint64_t end = begin + len;
    for (auto it = ranges.lower_bound(begin > max_len_ ? begin - max_len_ : 0);
         it != ranges.end() && it->first < end; ++it) {
      const std::uint64_t lo = std::max(begin, it->first);
      const std::uint64_t hi = std::min(end, it->second);
      if (hi > lo) overlap += hi - lo;
    }
    ranges.emplace(begin, end);
    max_len_ = std::max(max_len_, len);
    total_ += len;
    return overlap;
  }
  std::uint64_t total() const { return total_; }

 private:
  std::map<std::string, std::multimap<std::uint64_t, std::uint64_t>> by_pad_;
  std::uint64_t max_len_ = 0;
  std::uint64_t total_ = 0;
};

std::vector<std::uint8_t> make_payload(std::uint32_t tag, std::size_t size, std::mt19937_64& rng) {
  // Any non-ack tag byte will do; the transport only peeks at it.
  std::vector<std::uint8_t> p(std::max<std::size_t>(size, 5));
  p[0] = static_cast<std::uint8_t>(EnvelopeKind::encounter);
  for (int i = 0; i < 4; ++i) p[1 + i] = static_cast<std::uint8_t>(tag >> (8 * i));
  for (std::size_t i = 5; i < p.size(); ++i) p[i] = static_cast<std::uint8_t>(rng());
  return p;
}

std::uint32_t tag_of(std::span<const std::uint8_t> p) {
  std::uint32_t t = 0;
  for (int i = 0; i < 4; ++i) t |= static_cast<std::uint32_t>(p[1 + i]) << (8 * i);
  return t;
}

}  // namespace

LinkChaosResult run_link_chaos(const std::filesystem::path& dir, const LinkChaosOptions& o) {
  o.faults.validate();
  o.config.validate();
  generate_pad_pair(dir, "chaos", o.pad_bytes);

  LinkChaosResult result;
  result.payloads = o.messages;
  std::mt19937_64 rng(o.seed);
  std::bernoulli_distribution crash_now(o.crash_rate);

  Coverage observed, wire;
  SimulatedSmsNetwork net(o.faults);
  SmsGateway& gw_a = net.endpoint("a");
  SmsGateway& gw_b = net.endpoint("b");
  TimePoint now{0};

  // Sender application state that would live in durable storage.
  std::vector<std::vector<std::uint8_t>> payloads;
  for (std::size_t i = 0; i < o.messages; ++i)
    payloads.push_back(make_payload(static_cast<std::uint32_t>(i), o.payload_bytes, rng));
  std::set<std::uint32_t> unacked;
  std::size_t next_to_send = 0;

  std::set<std::uint32_t> received;
  std::map<MessageId, int> deliveries;

  struct Node {
    PadBook pads;
    std::unique_ptr<DeliveryLog> log;
    std::unique_ptr<Transport> transport;
  };
  std::optional<Node> a, b;
  std::map<MessageId, std::uint32_t> a_inflight;
  bool a_crashed = false, b_crashed = false;

  auto audit_emit = [&](SmsGateway& gw, const std::string& to, bool& crashed,
                        const std::string& text) {
    if (crash_now(rng)) {
      crashed = true;
      throw Crash{};
    }
    const Segment seg = decode_text(text);
    result.reused_bytes_on_wire += wire.add(seg.pad_id, seg.pad_offset, seg.payload.size());
    ++result.emissions;
    gw.send_text(to, text);
  };

  auto open_pads = [&](const std::filesystem::path& sub, PadRole role) {
    PadBook book;
    auto pad = PadFile::open(dir / sub, "chaos", role);
    pad->set_observer([&](const std::string& id, std::uint64_t off, std::size_t len) {
      result.reused_bytes_observed += observed.add(id, off, len);
    });
    book.add(pad);
    return book;
  };

  auto boot_a = [&] {
    a.reset();
    a.emplace();
    a->pads = open_pads("terminal", PadRole::terminal);
    a_inflight.clear();
    Transport::Callbacks cb;
    cb.emit = [&](const std::string& t) { audit_emit(gw_a, "b", a_crashed, t); };
    cb.acked = [&](const MessageId& id) {
      if (auto it = a_inflight.find(id); it != a_inflight.end()) {
        unacked.erase(it->second);
        a_inflight.erase(it);
      }
    };
    cb.dead_letter = [&](const DeadLetter& dl) {
      ++result.dead_letters;
      a_inflight.erase(dl.msg_id);
    };
    a->transport = std::make_unique<Transport>(a->pads, o.config, cb);
  };
  auto boot_b = [&] {
    b.reset();
    b.emplace();
    b->pads = open_pads("server", PadRole::server);
    b->log = std::make_unique<FileDeliveryLog>(dir / "delivered.log");
    Transport::Callbacks cb;
    cb.emit = [&](const std::string& t) { audit_emit(gw_b, "a", b_crashed, t); };
    cb.deliver = [&](const MessageId& id, std::span<const std::uint8_t> env) {
      if (++deliveries[id] > 1) ++result.repeated_msg_deliveries;
      received.insert(tag_of(env));
    };
    b->transport = std::make_unique<Transport>(b->pads, o.config, cb, b->log.get());
  };
  auto crash_check = [&] {
    if (a_crashed) {
      ++result.crashes;
      a_crashed = false;
      boot_a();
    }
    if (b_crashed) {
      ++result.crashes;
      b_crashed = false;
      boot_b();
    }
  };

  gw_a.on_text([&](const std::string&, const std::string& text) {
    if (a_crashed) return;
    try {
      a->transport->on_text(text, now);
    } catch (const Crash&) {
    }
  });
  gw_b.on_text([&](const std::string&, const std::string& text) {
    if (b_crashed) return;
    try {
      b->transport->on_text(text, now);
    } catch (const Crash&) {
    }
  });

  boot_a();
  boot_b();
  const TimePoint step{250};
  const std::size_t per_step = 4;

  for (; result.steps < o.max_steps; ++result.steps) {
    // New payloads, plus anything unacked that a crash or dead letter orphaned.
    std::vector<std::uint32_t> to_send;
    for (std::size_t k = 0; k < per_step && next_to_send < o.messages; ++k) {
      unacked.insert(static_cast<std::uint32_t>(next_to_send));
      to_send.push_back(static_cast<std::uint32_t>(next_to_send++));
    }
    std::set<std::uint32_t> inflight_tags;
    for (const auto& [id, tag] : a_inflight) inflight_tags.insert(tag);
    for (auto tag : unacked)
      if (!inflight_tags.contains(tag) &&
          std::find(to_send.begin(), to_send.end(), tag) == to_send.end())
        to_send.push_back(tag);
    for (auto tag : to_send) {
      if (a_crashed) break;
      try {
        const MessageId id = a->transport->send(payloads[tag], now);
        a_inflight[id] = tag;
      } catch (const Crash&) {
      }
    }
    crash_check();

    net.pump();
    crash_check();
    now += step;
    for (auto* n : {&a, &b}) {
      try {
        (*n)->transport->on_timer(now);
      } catch (const Crash&) {
      }
    }
    crash_check();

    if (next_to_send == o.messages && unacked.empty()) {
      result.completed = true;
      break;
    }
  }
  result.payloads_received = received.size();
  result.pad_bytes_consumed = observed.total();
  return result;
}

}  // namespace adx::testing
