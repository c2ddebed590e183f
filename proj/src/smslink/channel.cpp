#include "adx/smslink/channel.hpp"

#include <stdexcept>

namespace adx::smslink {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void ChannelFaults::validate() const {
  if (!(loss >= 0.0 && loss <= 1.0)) throw std::invalid_argument("loss must be in [0, 1]");
  if (!(duplicate >= 0.0 && duplicate <= 1.0))
    throw std::invalid_argument("duplicate must be in [0, 1]");
}

SimulatedChannel::SimulatedChannel(ChannelFaults faults) : faults_(faults), rng_(faults.seed) {
  faults_.validate();
}

void SimulatedChannel::send(std::string text) {
  const std::uint64_t ordinal = next_ordinal_++;
  trace_.push_back({Event::sent, ordinal});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng_) < faults_.loss) {
    trace_.push_back({Event::dropped, ordinal});
    return;
  }
  const bool dup = unit(rng_) < faults_.duplicate;
  if (dup) {
    trace_.push_back({Event::duplicated, ordinal});
    pending_.push_back({ordinal, text});
  }
  pending_.push_back({ordinal, std::move(text)});
}

std::optional<std::string> SimulatedChannel::receive() {
  if (pending_.empty()) return std::nullopt;
  std::size_t pick = 0;
  if (faults_.reorder_window > 0 && pending_.size() > 1) {
    const std::size_t span = std::min(faults_.reorder_window, pending_.size() - 1);
    pick = std::uniform_int_distribution<std::size_t>(0, span)(rng_);
    // Anything already overtaken window times must go now.
    for (std::size_t i = 0; i < pick; ++i) {
      if (pending_[i].overtaken >= faults_.reorder_window) {
        pick = i;
        break;
      }
    }
    for (std::size_t i = 0; i < pick; ++i) ++pending_[i].overtaken;
  }
  Pending out = std::move(pending_[pick]);
  pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(pick));
  trace_.push_back({Event::delivered, out.ordinal});
  return std::move(out.text);
}

std::vector<std::string> SimulatedChannel::drain() {
  std::vector<std::string> out;
  while (auto t = receive()) out.push_back(std::move(*t));
  return out;
}

class SimulatedSmsNetwork::Endpoint : public SmsGateway {
 public:
  Endpoint(SimulatedSmsNetwork& net, std::string name) : net_(net), name_(std::move(name)) {}

  void send_text(const std::string& dest, const std::string& text) override {
    ++net_.texts_sent_;
    net_.link(name_, dest).send(text);
  }
  void on_text(Handler handler) override { handler_ = std::move(handler); }

  void deliver(const std::string& from, const std::string& text) {
    if (handler_) handler_(from, text);
  }

 private:
  SimulatedSmsNetwork& net_;
  std::string name_;
  Handler handler_;
};

SimulatedSmsNetwork::SimulatedSmsNetwork(ChannelFaults faults) : faults_(faults) {
  faults_.validate();
}

SimulatedSmsNetwork::~SimulatedSmsNetwork() = default;

SmsGateway& SimulatedSmsNetwork::endpoint(const std::string& name) {
  auto& slot = endpoints_[name];
  if (!slot) slot = std::make_unique<Endpoint>(*this, name);
  return *slot;
}

SimulatedChannel& SimulatedSmsNetwork::link(const std::string& from, const std::string& to) {
  auto& slot = links_[{from, to}];
  if (!slot) {
    ChannelFaults f = faults_;
    f.seed = faults_.seed * 1000003ull + fnv1a(from + "\x1f" + to);
    slot = std::make_unique<SimulatedChannel>(f);
  }
  return *slot;
}

std::size_t SimulatedSmsNetwork::pump() {
  std::size_t delivered = 0;
  // Snapshot the texts first: handlers may send replies, which wait for the
  // next pump.
  std::vector<std::tuple<std::string, std::string, std::string>> batch;
  for (auto& [key, channel] : links_)
    for (auto& text : channel->drain()) batch.emplace_back(key.first, key.second, std::move(text));
  for (auto& [from, to, text] : batch) {
    auto it = endpoints_.find(to);
    if (it == endpoints_.end()) continue;
    it->second->deliver(from, text);
    ++delivered;
  }
  return delivered;
}

std::size_t SimulatedSmsNetwork::in_flight() const {
  std::size_t n = 0;
  for (const auto& [key, channel] : links_) n += channel->in_flight();
  return n;
}

}  // namespace adx::smslink
