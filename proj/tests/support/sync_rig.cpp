#include "support/sync_rig.hpp"

#include "adx/smslink/otp.hpp"

namespace adx::testing {

namespace {

constexpr const char* kTerminal = "terminal";
constexpr const char* kServer = "server";

}  // namespace

SyncRig::SyncRig(const std::filesystem::path& dir,
                 std::shared_ptr<const knowledge::KnowledgeBase> kb, SyncRigOptions options)
    : dir_(dir), kb_(std::move(kb)), options_(std::move(options)) {
  smslink::generate_pad_pair(dir_ / "pads", "rig", options_.pad_bytes);
  net_ = std::make_unique<smslink::SimulatedSmsNetwork>(options_.faults);
  restart_server();
  restart_terminal();
  net_->endpoint(kTerminal).on_text([this](const std::string&, const std::string& text) {
    agent_->on_sms_text(text, now_);
  });
  net_->endpoint(kServer).on_text([this](const std::string&, const std::string& text) {
    server_->on_sms_text(text, now_);
  });
}

SyncRig::~SyncRig() = default;

void SyncRig::restart_server() {
  server_.reset();
  server_ = std::make_unique<server::Server>(kb_, dir_ / "server-data");
  server_->enable_sms(
      smslink::PadBook::open_dir(dir_ / "pads" / "server", smslink::PadRole::server),
      options_.channel,
      [this](const std::string& t) { net_->endpoint(kServer).send_text(kTerminal, t); });
}

void SyncRig::restart_terminal() {
  agent_.reset();
  terminal::TerminalConfig cfg;
  cfg.store_dir = dir_ / "terminal-data";
  cfg.server_url = options_.server_url;
  cfg.sms.pad_dir = dir_ / "pads" / "terminal";
  cfg.sms.channel = options_.channel;
  agent_ = std::make_unique<terminal::TerminalAgent>(kb_, cfg);
  agent_->set_sms_emit(
      [this](const std::string& t) { net_->endpoint(kTerminal).send_text(kServer, t); });
}

terminal::SyncReport SyncRig::round() {
  auto report = agent_->sync_once(now_);
  net_->pump();
  now_ += options_.step;
  agent_->on_sms_timer(now_);
  server_->on_sms_timer(now_);
  return report;
}

std::optional<int> SyncRig::converge(int max_rounds) {
  for (int r = 1; r <= max_rounds; ++r) {
    round();
    if (agent_->store().sync_state().outbox.empty() &&
        agent_->params_version() == server_->params_version())
      return r;
  }
  return std::nullopt;
}

}  // namespace adx::testing
