#include "adx/terminal/config.hpp"

#include <fstream>

namespace adx::terminal {

using nlohmann::json;

std::string_view to_string(SyncMode m) {
  switch (m) {
    case SyncMode::automatic: return "auto";
    case SyncMode::http: return "http";
    case SyncMode::sms: return "sms";
  }
  return "?";
}

TerminalConfig TerminalConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  try {
    TerminalConfig c;
    c.kb_path = resolve(j.at("kb_path").get<std::string>());
    c.store_dir = resolve(j.value("store_dir", std::string("terminal-data")));
    c.server_url = j.value("server_url", std::string());
    c.bearer_token = j.value("bearer_token", std::string());
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.sync_interval_ms = j.value("sync_interval_ms", c.sync_interval_ms);
    const auto mode = j.value("sync_mode", std::string("auto"));
    if (mode == "auto")
      c.mode = SyncMode::automatic;
    else if (mode == "http")
      c.mode = SyncMode::http;
    else if (mode == "sms")
      c.mode = SyncMode::sms;
    else
      throw ConfigFileError("sync_mode must be auto, http or sms");

    if (j.contains("sms")) {
      const auto& s = j.at("sms");
      c.sms.pad_dir = resolve(s.value("pad_dir", std::string()));
      c.sms.gateway_url = s.value("gateway_url", std::string());
      c.sms.channel.segment_capacity = s.value("segment_capacity", c.sms.channel.segment_capacity);
      c.sms.channel.ack_timeout = std::chrono::milliseconds(s.value(
          "ack_timeout_ms", static_cast<std::int64_t>(c.sms.channel.ack_timeout.count())));
      c.sms.channel.max_retries = s.value("max_retries", c.sms.channel.max_retries);
      if (s.contains("channel")) {
        const auto& ch = s.at("channel");
        c.sms.faults.loss = ch.value("loss", 0.0);
        c.sms.faults.duplicate = ch.value("dup", 0.0);
        c.sms.faults.reorder_window = ch.value("reorder", std::size_t{0});
        c.sms.faults.seed = ch.value("seed", std::uint64_t{0});
      }
    }
    if (j.contains("engine")) {
      const auto& e = j.at("engine");
      c.engine.max_questions = e.value("max_questions", c.engine.max_questions);
      c.engine.posterior_stop = e.value("posterior_stop", c.engine.posterior_stop);
      c.engine.entropy_stop = e.value("entropy_stop", c.engine.entropy_stop);
      c.engine.top_k = e.value("top_k", c.engine.top_k);
    }
    c.eta = j.value("eta", c.eta);

    if (c.port < 0 || c.port > 65535) throw ConfigFileError("port out of range");
    if (c.sync_interval_ms < 1) throw ConfigFileError("sync_interval_ms must be positive");
    if (!(c.eta > 0.0 && c.eta <= 1.0)) throw ConfigFileError("eta must be in (0, 1]");
    c.engine.validate();
    c.sms.channel.validate();
    c.sms.faults.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigFileError(std::string("terminal config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigFileError(std::string("terminal config: ") + e.what());
  } catch (const engine::ConfigError& e) {
    throw ConfigFileError(std::string("terminal config: ") + e.what());
  }
}

TerminalConfig TerminalConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigFileError("cannot read config " + path.string());
  try {
    return from_json(json::parse(in), path.parent_path());
  } catch (const json::parse_error& e) {
    throw ConfigFileError(path.string() + ": " + e.what());
  }
}

}  // namespace adx::terminal
